// Synthetic paired datasets with known ground truth: procedural tissue
// geometry rendered into the three contrast channels and an analytically
// colorized ground-truth label, plus a per-pulse scan simulator and the
// Cartesian-grid reconstruction used on real acquisitions.
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "parstain/image.hpp"
#include "parstain/registration.hpp"

namespace parstain {

struct PhantomSpec {
  int height = 512;
  int width = 512;
  double pitch_nm = kDefaultPitchNm;
  double nuclei_density = 5.0;  // nuclei per 10^4 px^2
  double nucleus_radius_mean = 5.0;
  double nucleus_radius_spread = 1.0;
  double fiber_density = 1.5;  // strands per 10^4 px^2
  int vessel_count = 3;
  double noise_sigma = 0.01;

  void validate() const;
};

// Analytic colorization constants; recorded in run manifests so labels are
// exactly reproducible.
struct HePalette {
  double hematoxylin_od[3] = {0.65, 0.70, 0.29};
  double eosin_od[3] = {0.07, 0.99, 0.11};
  double hematoxylin_strength = 1.8;
  double eosin_strength = 1.1;
  double stroma_eosin = 0.85;
  double envelope_eosin = 0.18;
};

constexpr double kPulseRateHz = 50e3;

struct ScanRecord {
  std::int64_t pulse_index = 0;
  double stage_x_nm = 0;
  double stage_y_nm = 0;
  float f_nr = 0, f_rad = 0, f_sc = 0;
};

struct GridSpec {
  int height = 0;
  int width = 0;
  double pitch_nm = kDefaultPitchNm;
  double origin_x_nm = 0;
  double origin_y_nm = 0;

  void validate() const;
};

std::pair<MultiChannelImage, RGBImage> generate_phantom(const PhantomSpec& spec,
                                                        std::uint64_t seed,
                                                        const HePalette& palette = {});

// One record per grid node in raster order; stage position jitters uniformly
// in [-jitter_nm, +jitter_nm]^2 and features are sampled from the truth by
// bilinear interpolation, routed through the per-pulse trace compression.
std::vector<ScanRecord> simulate_scan(const MultiChannelImage& truth, const GridSpec& grid,
                                      double jitter_nm, std::uint64_t seed);

// Single-feature compression of a per-pulse trace: maximum absolute
// amplitude, clipped to [0,1].
double compress_event(std::span<const double> trace);

// Nearest-record-within-one-pitch gridding with 4-neighbor gap fill.
MultiChannelImage reconstruct_grid(const std::vector<ScanRecord>& records, const GridSpec& grid);

void save_scan_records(const std::vector<ScanRecord>& records, const std::string& path);
std::vector<ScanRecord> load_scan_records(const std::string& path);

// Smooth synthetic displacement field: a few Gaussian bumps rescaled so the
// maximum displacement magnitude over a dense grid equals the requested
// amplitude.
struct WarpField {
  struct Bump {
    double cx = 0, cy = 0, sigma = 1, ax = 0, ay = 0;
  };
  std::vector<Bump> bumps;
  double scale = 1.0;

  void displacement(double x, double y, double& dx, double& dy) const;
};

WarpField make_warp_field(int height, int width, double amplitude_px, std::uint64_t seed);

struct WarpPairResult {
  RGBImage warped;
  ControlPointSet points;
  WarpField field;
};

// Applies a known smooth non-rigid displacement to the label image and
// returns exact point correspondences sampled from the field.
WarpPairResult warp_pair(const RGBImage& he, double warp_amplitude_px, std::uint64_t seed,
                         int n_points = 30);

}  // namespace parstain
