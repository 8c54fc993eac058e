#include "parstain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_set>
#include <vector>

#include "parstain/kernels.hpp"

namespace parstain {

namespace {

// sRGB D65 colorimetry
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
constexpr double kWhite[3] = {0.950470, 1.000000, 1.088830};

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  constexpr double d3 = d * d * d;
  return t > d3 ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

}  // namespace

void rgb_to_lab_pixel(double r, double g, double b, double& L, double& a, double& bb) {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);
  const double x = kM[0][0] * rl + kM[0][1] * gl + kM[0][2] * bl;
  const double y = kM[1][0] * rl + kM[1][1] * gl + kM[1][2] * bl;
  const double z = kM[2][0] * rl + kM[2][1] * gl + kM[2][2] * bl;
  const double fx = lab_f(x / kWhite[0]);
  const double fy = lab_f(y / kWhite[1]);
  const double fz = lab_f(z / kWhite[2]);
  L = 116.0 * fy - 16.0;
  a = 500.0 * (fx - fy);
  bb = 200.0 * (fy - fz);
}

LabImage rgb_to_lab(const RGBImage& img) {
  LabImage out(img.height, img.width);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      rgb_to_lab_pixel(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), out.l[i], out.a[i],
                       out.b[i]);
    }
  }
  return out;
}

double ssim(int height, int width, const double* a, const double* b, const SsimParams& params) {
  if (height < params.window || width < params.window)
    throw BadInputError("ssim: image smaller than window");
  const int n = params.window;
  const auto taps = kernels::gaussian_taps(n, params.sigma);
  const int oh = height - n + 1, ow = width - n + 1;
  const std::size_t in_n = static_cast<std::size_t>(height) * width;
  const std::size_t out_n = static_cast<std::size_t>(oh) * ow;

  std::vector<double> prod(in_n * 3);
  for (std::size_t i = 0; i < in_n; ++i) {
    prod[i] = a[i] * a[i];
    prod[in_n + i] = b[i] * b[i];
    prod[2 * in_n + i] = a[i] * b[i];
  }
  std::vector<double> tmp(in_n);
  std::vector<double> mu1(out_n), mu2(out_n), saa(out_n), sbb(out_n), sab(out_n);
  kernels::sep_filter_valid(height, width, a, n, taps.data(), tmp.data(), mu1.data());
  kernels::sep_filter_valid(height, width, b, n, taps.data(), tmp.data(), mu2.data());
  kernels::sep_filter_valid(height, width, prod.data(), n, taps.data(), tmp.data(), saa.data());
  kernels::sep_filter_valid(height, width, prod.data() + in_n, n, taps.data(), tmp.data(),
                            sbb.data());
  kernels::sep_filter_valid(height, width, prod.data() + 2 * in_n, n, taps.data(), tmp.data(),
                            sab.data());

  const double c1 = params.k1 * params.dynamic_range * params.k1 * params.dynamic_range;
  const double c2 = params.k2 * params.dynamic_range * params.k2 * params.dynamic_range;
  double acc = 0.0;
  for (std::size_t i = 0; i < out_n; ++i) {
    const double m1 = mu1[i], m2 = mu2[i];
    const double v1 = saa[i] - m1 * m1;
    const double v2 = sbb[i] - m2 * m2;
    const double cov = sab[i] - m1 * m2;
    acc += ((2 * m1 * m2 + c1) * (2 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
  }
  return acc / static_cast<double>(out_n);
}

double ssim_lab(const LabImage& a, const LabImage& b) {
  if (a.height != b.height || a.width != b.width) throw BadInputError("ssim_lab: shape mismatch");
  SsimParams p;
  p.dynamic_range = 100.0;  // L range
  const double s_l = ssim(a.height, a.width, a.l.data(), b.l.data(), p);
  p.dynamic_range = 255.0;  // a/b span
  const double s_a = ssim(a.height, a.width, a.a.data(), b.a.data(), p);
  const double s_b = ssim(a.height, a.width, a.b.data(), b.b.data(), p);
  return (s_l + s_a + s_b) / 3.0;
}

double rmse_lab(const LabImage& a, const LabImage& b) {
  if (a.height != b.height || a.width != b.width) throw BadInputError("rmse_lab: shape mismatch");
  const std::size_t n = a.l.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dl = a.l[i] - b.l[i];
    const double da = a.a[i] - b.a[i];
    const double db = a.b[i] - b.b[i];
    acc += dl * dl + da * da + db * db;
  }
  return std::sqrt(acc / static_cast<double>(3 * n));
}

double ssim_rgb(const RGBImage& a, const RGBImage& b) {
  return ssim_lab(rgb_to_lab(a), rgb_to_lab(b));
}

double rmse_rgb(const RGBImage& a, const RGBImage& b) {
  return rmse_lab(rgb_to_lab(a), rgb_to_lab(b));
}

MetricsReport evaluate(const RGBImage& pred, const RGBImage& truth, int n_patches, int patch_px,
                       std::int64_t seed) {
  if (pred.height != truth.height || pred.width != truth.width)
    throw BadInputError("evaluate: shape mismatch");
  if (patch_px > pred.height || patch_px > pred.width)
    throw BadInputError("evaluate: image smaller than patch");
  if (n_patches < 1) throw BadInputError("evaluate: n_patches must be >= 1");

  const int max_y = pred.height - patch_px;
  const int max_x = pred.width - patch_px;
  const std::size_t distinct =
      static_cast<std::size_t>(max_y + 1) * static_cast<std::size_t>(max_x + 1);

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::uniform_int_distribution<int> uy(0, max_y), ux(0, max_x);
  std::vector<std::pair<int, int>> corners;
  corners.reserve(n_patches);
  if (distinct >= static_cast<std::size_t>(n_patches)) {
    std::unordered_set<std::uint64_t> seen;
    while (corners.size() < static_cast<std::size_t>(n_patches)) {
      const int y = uy(rng), x = ux(rng);
      const std::uint64_t key = static_cast<std::uint64_t>(y) << 32 | static_cast<std::uint32_t>(x);
      if (seen.insert(key).second) corners.emplace_back(y, x);
    }
  } else {
    for (int i = 0; i < n_patches; ++i) corners.emplace_back(uy(rng), ux(rng));
  }

  std::vector<double> ssims(n_patches), rmses(n_patches);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_patches; ++i) {
    const auto [y0, x0] = corners[i];
    LabImage pa(patch_px, patch_px), pb(patch_px, patch_px);
    for (int y = 0; y < patch_px; ++y) {
      for (int x = 0; x < patch_px; ++x) {
        const std::size_t j = static_cast<std::size_t>(y) * patch_px + x;
        rgb_to_lab_pixel(pred.at(y0 + y, x0 + x, 0), pred.at(y0 + y, x0 + x, 1),
                         pred.at(y0 + y, x0 + x, 2), pa.l[j], pa.a[j], pa.b[j]);
        rgb_to_lab_pixel(truth.at(y0 + y, x0 + x, 0), truth.at(y0 + y, x0 + x, 1),
                         truth.at(y0 + y, x0 + x, 2), pb.l[j], pb.a[j], pb.b[j]);
      }
    }
    ssims[i] = ssim_lab(pa, pb);
    rmses[i] = rmse_lab(pa, pb);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double m = 0;
    for (const double x : v) m += x;
    m /= v.size();
    double var = 0;
    for (const double x : v) var += (x - m) * (x - m);
    var /= v.size();
    return std::pair<double, double>(m, std::sqrt(var));
  };

  MetricsReport r;
  r.n_patches = n_patches;
  r.patch_px = patch_px;
  r.seed = seed;
  std::tie(r.ssim_mean, r.ssim_std) = mean_std(ssims);
  std::tie(r.rmse_mean, r.rmse_std) = mean_std(rmses);
  r.pred_digest = digest_pixels(pred);
  r.truth_digest = digest_pixels(truth);
  return r;
}

std::string MetricsReport::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "n_patches: %d\n"
                "patch_px: %d\n"
                "ssim: %.4f +/- %.4f\n"
                "rmse: %.4f +/- %.4f\n"
                "seed: %lld\n"
                "pred_digest: %s\n"
                "truth_digest: %s\n",
                n_patches, patch_px, ssim_mean, ssim_std, rmse_mean, rmse_std,
                static_cast<long long>(seed), pred_digest.c_str(), truth_digest.c_str());
  return buf;
}

void write_metrics_report(const MetricsReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadInputError("cannot write metrics report: " + path);
  out << r.to_text();
}

}  // namespace parstain
