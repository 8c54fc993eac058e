#pragma once

#include <cstdint>
#include <string>

#include "parstain/image.hpp"

namespace parstain {

struct PhantomSection {
  int height = 512;
  int width = 512;
  double pitch_nm = kDefaultPitchNm;
  double nuclei_density = 5.0;  // nuclei per 10^4 px^2
  double nucleus_radius_mean = 5.0;
  double nucleus_radius_spread = 1.0;
  double fiber_density = 1.5;  // strands per 10^4 px^2
  int vessel_count = 3;
  double noise_sigma = 0.01;
  double warp_amplitude_px = 6.0;
  double jitter_nm = 0.0;
};

struct RegistrationSection {
  double gate_mean_px = 2.0;
  int neighbors = 12;  // K for local polynomial fits
};

struct PreprocessSection {
  double low_saturate_pct = 1.0;
  double high_saturate_pct = 1.0;
  bool invert = true;
  bool hist_match = true;
};

struct TilingSection {
  int patch = 256;
  int train_stride = 128;
  int infer_stride = 128;
  int block_px = 512;
  double train_ratio = 0.71;
  double val_ratio = 0.29;
};

struct TrainSection {
  int max_epochs = 500;
  int patience = 20;
  double lambda_l1 = 100.0;
  int batch_size = 1;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int base_width = 64;
  int d_base_width = 64;
  int depth = 8;
  std::string norm = "instance";  // instance | batch
  bool augment_flips = true;
};

struct EvalSection {
  int n_patches = 1000;
  int patch_px = 256;
};

struct PipelineConfig {
  std::int64_t seed = 0;
  std::string input_dir;
  std::string output_dir;
  PhantomSection phantom;
  RegistrationSection registration;
  PreprocessSection preprocess;
  TilingSection tiling;
  TrainSection train;
  EvalSection eval;

  // Canonical serialized form (defaults filled in, keys sorted); the config
  // digest is the content hash of this text.
  std::string canonical_text() const;
  std::string digest() const;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text);
void save_config(const PipelineConfig& cfg, const std::string& path);

}  // namespace parstain
