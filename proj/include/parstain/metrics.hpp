// Quantitative comparison of virtual stains against ground truth in CIE Lab:
// per-patch SSIM and RMSE aggregated as mean +/- std over seeded patches.
#pragma once

#include <cstdint>
#include <string>

#include "parstain/image.hpp"

namespace parstain {

// sRGB (D65) -> XYZ -> CIE Lab with the standard display transfer curve.
LabImage rgb_to_lab(const RGBImage& img);
void rgb_to_lab_pixel(double r, double g, double b, double& L, double& a, double& bb);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean of the local SSIM map with a Gaussian window, valid region only.
double ssim(int height, int width, const double* a, const double* b, const SsimParams& params);

// Channel SSIMs averaged equally; dynamic ranges 100 (L) and 255 (a/b span).
double ssim_lab(const LabImage& a, const LabImage& b);

// Joint RMSE over all pixels and all three Lab channels, in Lab units.
double rmse_lab(const LabImage& a, const LabImage& b);

double ssim_rgb(const RGBImage& a, const RGBImage& b);
double rmse_rgb(const RGBImage& a, const RGBImage& b);

struct MetricsReport {
  int n_patches = 0;
  int patch_px = 0;
  double ssim_mean = 0, ssim_std = 0;
  double rmse_mean = 0, rmse_std = 0;
  std::int64_t seed = 0;
  std::string pred_digest, truth_digest;

  std::string to_text() const;
};

// Samples n_patches top-left corners with the given seed (unique positions
// when the image offers enough, with replacement otherwise), converts each
// patch pair to Lab, and reports SSIM/RMSE mean +/- std.
MetricsReport evaluate(const RGBImage& pred, const RGBImage& truth, int n_patches = 1000,
                       int patch_px = 256, std::int64_t seed = 0);

void write_metrics_report(const MetricsReport& r, const std::string& path);

}  // namespace parstain
