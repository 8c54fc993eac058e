#include "parstain/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace parstain {

namespace {

// Linear-interpolated order statistic at fraction alpha in [0,1].
double quantile_sorted(const std::vector<float>& sorted, double alpha) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = alpha * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

ChannelImage contrast_stretch(const ChannelImage& c, const PreprocessSection& cfg) {
  if (cfg.low_saturate_pct < 0 || cfg.high_saturate_pct < 0 ||
      cfg.low_saturate_pct + cfg.high_saturate_pct >= 100.0)
    throw BadInputError("contrast_stretch: saturation percentages out of range");
  std::vector<float> sorted(c.pixels);
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, cfg.low_saturate_pct / 100.0);
  const double hi = quantile_sorted(sorted, 1.0 - cfg.high_saturate_pct / 100.0);
  ChannelImage out(c.height, c.width, c.pitch_nm);
  if (hi <= lo) {
    std::fill(out.pixels.begin(), out.pixels.end(), 0.5f);
    return out;
  }
  const double inv = 1.0 / (hi - lo);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * c.width + x;
      out.pixels[i] = static_cast<float>(std::clamp((c.pixels[i] - lo) * inv, 0.0, 1.0));
    }
  }
  return out;
}

ChannelImage invert(const ChannelImage& c) {
  ChannelImage out(c.height, c.width, c.pitch_nm);
  for (std::size_t i = 0; i < c.pixels.size(); ++i) out.pixels[i] = 1.0f - c.pixels[i];
  return out;
}

std::array<double, 256> channel_cdf(const ChannelImage& c) {
  std::array<double, 256> cdf{};
  std::array<std::size_t, 256> counts{};
  for (const float v : c.pixels) {
    int bin = static_cast<int>(v * 256.0f);
    bin = std::clamp(bin, 0, 255);
    ++counts[bin];
  }
  double acc = 0;
  const double inv = 1.0 / static_cast<double>(c.pixels.size());
  for (int b = 0; b < 256; ++b) {
    acc += counts[b] * inv;
    cdf[b] = acc;
  }
  cdf[255] = 1.0;
  return cdf;
}

namespace {

// F(x): piecewise-linear CDF value, interpolating inside the bin.
double cdf_at(const std::array<double, 256>& cdf, double x) {
  int bin = static_cast<int>(x * 256.0);
  bin = std::clamp(bin, 0, 255);
  const double lo = bin == 0 ? 0.0 : cdf[bin - 1];
  const double frac = std::clamp(x * 256.0 - bin, 0.0, 1.0);
  return lo + (cdf[bin] - lo) * frac;
}

// F^-1(u): smallest bin whose cumulative mass reaches u, linear inside it.
double cdf_inverse(const std::array<double, 256>& cdf, double u) {
  u = std::clamp(u, 0.0, 1.0);
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  const int bin = static_cast<int>(it - cdf.begin());
  if (bin >= 256) return 1.0;
  const double lo = bin == 0 ? 0.0 : cdf[bin - 1];
  const double mass = cdf[bin] - lo;
  const double frac = mass > 0 ? (u - lo) / mass : 0.0;
  return (bin + frac) / 256.0;
}

}  // namespace

ChannelImage histogram_match_cdf(const ChannelImage& c, const std::array<double, 256>& ref_cdf) {
  const auto src_cdf = channel_cdf(c);
  // per-bin lookup table keeps the map monotone and cheap
  std::array<double, 257> lut;
  for (int b = 0; b <= 256; ++b) {
    const double x = b / 256.0;
    lut[b] = cdf_inverse(ref_cdf, cdf_at(src_cdf, x));
  }
  ChannelImage out(c.height, c.width, c.pitch_nm);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * c.width + x;
      const double v = c.pixels[i] * 256.0;
      int bin = static_cast<int>(v);
      bin = std::clamp(bin, 0, 255);
      const double frac = std::clamp(v - bin, 0.0, 1.0);
      out.pixels[i] = static_cast<float>(lut[bin] * (1.0 - frac) + lut[bin + 1] * frac);
    }
  }
  return out;
}

ChannelImage histogram_match(const ChannelImage& c, const ChannelImage& reference) {
  const auto [mn, mx] = std::minmax_element(reference.pixels.begin(), reference.pixels.end());
  if (*mn == *mx) {
    // degenerate rule: a constant reference forces that constant everywhere
    ChannelImage out(c.height, c.width, c.pitch_nm);
    std::fill(out.pixels.begin(), out.pixels.end(), *mn);
    return out;
  }
  return histogram_match_cdf(c, channel_cdf(reference));
}

MultiChannelImage stack_channels(const ChannelImage& non_radiative, const ChannelImage& radiative,
                                 const ChannelImage& scattering) {
  if (radiative.height != non_radiative.height || radiative.width != non_radiative.width ||
      scattering.height != non_radiative.height || scattering.width != non_radiative.width)
    throw BadInputError("stack_channels: shape mismatch");
  if (radiative.pitch_nm != non_radiative.pitch_nm ||
      scattering.pitch_nm != non_radiative.pitch_nm)
    throw BadInputError("stack_channels: pitch mismatch");
  MultiChannelImage out;
  out.non_radiative = non_radiative;
  out.radiative = radiative;
  out.scattering = scattering;
  return out;
}

ChannelImage luminance(const RGBImage& rgb) {
  ChannelImage out(rgb.height, rgb.width, rgb.pitch_nm > 0 ? rgb.pitch_nm : kDefaultPitchNm);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      out.at(y, x) = std::clamp(
          0.299f * rgb.at(y, x, 0) + 0.587f * rgb.at(y, x, 1) + 0.114f * rgb.at(y, x, 2), 0.0f,
          1.0f);
    }
  }
  return out;
}

ChannelImage preprocess_channel(const ChannelImage& c, const PreprocessSection& cfg,
                                const std::array<double, 256>* ref_cdf) {
  ChannelImage cur = contrast_stretch(c, cfg);
  if (cfg.invert) cur = invert(cur);
  if (cfg.hist_match && ref_cdf) cur = histogram_match_cdf(cur, *ref_cdf);
  return cur;
}

MultiChannelImage preprocess_stack(const MultiChannelImage& in, const PreprocessSection& cfg,
                                   const std::array<double, 256>* ref_cdf) {
  return stack_channels(preprocess_channel(in.non_radiative, cfg, ref_cdf),
                        preprocess_channel(in.radiative, cfg, ref_cdf),
                        preprocess_channel(in.scattering, cfg, ref_cdf));
}

}  // namespace parstain
