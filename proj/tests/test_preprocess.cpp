#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "parstain/preprocess.hpp"

using namespace parstain;

namespace {

ChannelImage make_channel(int h, int w, std::function<float(int, int)> f) {
  ChannelImage img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(y, x) = f(y, x);
  return img;
}

// sort-based quantile with linear interpolation, independent of the
// implementation under test
double quantile_oracle(std::vector<float> v, double alpha) {
  std::sort(v.begin(), v.end());
  const double pos = alpha * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("contrast stretch: constant image maps to all 0.5") {
  const ChannelImage c = make_channel(8, 8, [](int, int) { return 0.37f; });
  const ChannelImage out = contrast_stretch(c, {});
  for (const float v : out.pixels) CHECK(v == 0.5f);
}

TEST_CASE("contrast stretch: two-level image maps to {0, 1}") {
  const ChannelImage c =
      make_channel(10, 10, [](int y, int) { return y < 5 ? 0.2f : 0.8f; });
  const ChannelImage out = contrast_stretch(c, {});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) CHECK(out.at(y, x) == (y < 5 ? 0.0f : 1.0f));
}

TEST_CASE("contrast stretch on a 1000-value ramp matches the sort-based quantile oracle") {
  const int n = 1000;
  const ChannelImage c = make_channel(1, n, [&](int, int x) { return (x + 0.5f) / n; });
  PreprocessSection cfg;  // 1% / 1%
  const ChannelImage out = contrast_stretch(c, cfg);

  const double lo = quantile_oracle(c.pixels, 0.01);
  const double hi = quantile_oracle(c.pixels, 0.99);
  int at_zero = 0, at_one = 0;
  for (int x = 0; x < n; ++x) {
    const double expect = std::clamp((c.pixels[x] - lo) / (hi - lo), 0.0, 1.0);
    CHECK(out.pixels[x] == doctest::Approx(expect).epsilon(1e-5));
    if (out.pixels[x] == 0.0f) ++at_zero;
    if (out.pixels[x] == 1.0f) ++at_one;
  }
  CHECK(at_zero >= 10);  // ceil(1% of N) saturated pixels at each end
  CHECK(at_one >= 10);
}

TEST_CASE("contrast stretch is monotone non-decreasing") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage c(32, 32);
  for (auto& v : c.pixels) v = u(rng);
  const ChannelImage out = contrast_stretch(c, {});
  for (std::size_t i = 0; i < c.pixels.size(); ++i)
    for (std::size_t j = 0; j < 50; ++j) {
      const std::size_t k = (i * 37 + j * 101) % c.pixels.size();
      if (c.pixels[i] <= c.pixels[k]) CHECK(out.pixels[i] <= out.pixels[k]);
    }
}

TEST_CASE("invert is pixelwise 1-x and an involution") {
  const ChannelImage c = make_channel(4, 4, [](int y, int x) { return (y * 4 + x) / 16.0f; });
  const ChannelImage inv = invert(c);
  CHECK(inv.at(0, 3) == doctest::Approx(1.0f - c.at(0, 3)));
  const ChannelImage point2 = make_channel(2, 2, [](int, int) { return 0.2f; });
  CHECK(invert(point2).at(0, 0) == doctest::Approx(0.8f).epsilon(1e-6));
  const ChannelImage twice = invert(inv);
  for (std::size_t i = 0; i < c.pixels.size(); ++i)
    CHECK(twice.pixels[i] == doctest::Approx(c.pixels[i]).epsilon(1e-7));

  double mean_in = 0, mean_out = 0;
  for (std::size_t i = 0; i < c.pixels.size(); ++i) {
    mean_in += c.pixels[i];
    mean_out += inv.pixels[i];
  }
  mean_in /= c.pixels.size();
  mean_out /= c.pixels.size();
  CHECK(mean_out == doctest::Approx(1.0 - mean_in).epsilon(1e-12));
}

TEST_CASE("histogram match: self-matching stays within one bin width") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage c(64, 64);
  for (auto& v : c.pixels) v = u(rng);
  const ChannelImage out = histogram_match(c, c);
  for (std::size_t i = 0; i < c.pixels.size(); ++i)
    CHECK(std::abs(out.pixels[i] - c.pixels[i]) <= 1.0f / 256.0f + 1e-6f);
}

TEST_CASE("histogram match: constant reference forces that constant") {
  const ChannelImage c = make_channel(16, 16, [](int y, int x) { return (y + x) / 32.0f; });
  const ChannelImage ref = make_channel(8, 8, [](int, int) { return 0.3f; });
  const ChannelImage out = histogram_match(c, ref);
  for (const float v : out.pixels) CHECK(v == 0.3f);
}

TEST_CASE("ramp matched to uniform reference becomes uniform (CDF-composition oracle)") {
  const int n = 4096;
  // skewed source: squared ramp; uniform reference: linear ramp
  const ChannelImage src = make_channel(1, n, [&](int, int x) {
    const float t = (x + 0.5f) / n;
    return t * t;
  });
  const ChannelImage ref = make_channel(1, n, [&](int, int x) { return (x + 0.5f) / n; });
  const ChannelImage out = histogram_match(src, ref);

  // oracle: out(x) = F_ref^-1(F_src(x)) computed from explicit CDFs; for a
  // squared ramp matched to a uniform ramp the composition is close to
  // identity on the rank scale, i.e. out ~ t
  for (int x = 0; x < n; x += 97) {
    const double t = (x + 0.5) / n;
    CHECK(out.pixels[x] == doctest::Approx(t).epsilon(0.02));
  }

  // histogram of the output is near-uniform: chi-square against uniform
  std::array<int, 32> hist{};
  for (const float v : out.pixels) ++hist[std::min(31, static_cast<int>(v * 32))];
  const double expect = static_cast<double>(n) / 32.0;
  double chi2 = 0;
  for (const int h : hist) chi2 += (h - expect) * (h - expect) / expect;
  CHECK(chi2 < 64.0);  // 31 dof; generous
}

TEST_CASE("histogram match preserves rank order") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ChannelImage c(48, 48);
  for (auto& v : c.pixels) v = u(rng);
  ChannelImage ref(48, 48);
  for (auto& v : ref.pixels) v = u(rng) * u(rng);
  const ChannelImage out = histogram_match(c, ref);
  for (std::size_t i = 1; i < c.pixels.size(); ++i) {
    const std::size_t j = (i * 613) % c.pixels.size();
    if (c.pixels[i] < c.pixels[j]) CHECK(out.pixels[i] <= out.pixels[j] + 1e-6f);
  }
}

TEST_CASE("stack_channels keeps the fixed channel order and rejects mismatches") {
  const ChannelImage a = make_channel(8, 8, [](int, int) { return 0.1f; });
  const ChannelImage b = make_channel(8, 8, [](int, int) { return 0.2f; });
  const ChannelImage c = make_channel(8, 8, [](int, int) { return 0.3f; });
  const MultiChannelImage m = stack_channels(a, b, c);
  CHECK(m.non_radiative.at(0, 0) == 0.1f);
  CHECK(m.radiative.at(0, 0) == 0.2f);
  CHECK(m.scattering.at(0, 0) == 0.3f);
  // unstacking is the identity
  CHECK(m.channel(0).pixels == a.pixels);
  CHECK(m.channel(1).pixels == b.pixels);
  CHECK(m.channel(2).pixels == c.pixels);

  const ChannelImage bad = make_channel(8, 9, [](int, int) { return 0.0f; });
  CHECK_THROWS_AS(stack_channels(a, b, bad), BadInputError);
}

TEST_CASE("luminance uses the 601 weights") {
  RGBImage rgb(1, 1);
  rgb.at(0, 0, 0) = 1.0f;
  rgb.at(0, 0, 1) = 0.5f;
  rgb.at(0, 0, 2) = 0.25f;
  CHECK(luminance(rgb).at(0, 0) ==
        doctest::Approx(0.299 * 1.0 + 0.587 * 0.5 + 0.114 * 0.25).epsilon(1e-6));
}
