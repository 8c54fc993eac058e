#include "parstain/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace parstain {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw BadInputError("unknown config key '" + it.key() + "' in section '" + section + "'");
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["input_dir"] = c.input_dir;
  j["output_dir"] = c.output_dir;
  j["phantom"] = {
      {"height", c.phantom.height},
      {"width", c.phantom.width},
      {"pitch_nm", c.phantom.pitch_nm},
      {"nuclei_density", c.phantom.nuclei_density},
      {"nucleus_radius_mean", c.phantom.nucleus_radius_mean},
      {"nucleus_radius_spread", c.phantom.nucleus_radius_spread},
      {"fiber_density", c.phantom.fiber_density},
      {"vessel_count", c.phantom.vessel_count},
      {"noise_sigma", c.phantom.noise_sigma},
      {"warp_amplitude_px", c.phantom.warp_amplitude_px},
      {"jitter_nm", c.phantom.jitter_nm},
  };
  j["registration"] = {
      {"gate_mean_px", c.registration.gate_mean_px},
      {"neighbors", c.registration.neighbors},
  };
  j["preprocess"] = {
      {"low_saturate_pct", c.preprocess.low_saturate_pct},
      {"high_saturate_pct", c.preprocess.high_saturate_pct},
      {"invert", c.preprocess.invert},
      {"hist_match", c.preprocess.hist_match},
  };
  j["tiling"] = {
      {"patch", c.tiling.patch},
      {"train_stride", c.tiling.train_stride},
      {"infer_stride", c.tiling.infer_stride},
      {"block_px", c.tiling.block_px},
      {"train_ratio", c.tiling.train_ratio},
      {"val_ratio", c.tiling.val_ratio},
  };
  j["train"] = {
      {"max_epochs", c.train.max_epochs},
      {"patience", c.train.patience},
      {"lambda_l1", c.train.lambda_l1},
      {"batch_size", c.train.batch_size},
      {"lr_g", c.train.lr_g},
      {"lr_d", c.train.lr_d},
      {"beta1", c.train.beta1},
      {"beta2", c.train.beta2},
      {"base_width", c.train.base_width},
      {"d_base_width", c.train.d_base_width},
      {"depth", c.train.depth},
      {"norm", c.train.norm},
      {"augment_flips", c.train.augment_flips},
  };
  j["eval"] = {
      {"n_patches", c.eval.n_patches},
      {"patch_px", c.eval.patch_px},
  };
  return j;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw BadInputError(std::string("config parse error: ") + e.what());
  }
  check_keys(j, "<root>",
             {"seed", "input_dir", "output_dir", "phantom", "registration", "preprocess",
              "tiling", "train", "eval"});
  PipelineConfig c;
  get(j, "seed", c.seed);
  get(j, "input_dir", c.input_dir);
  get(j, "output_dir", c.output_dir);
  if (j.contains("phantom")) {
    const json& s = j["phantom"];
    check_keys(s, "phantom",
               {"height", "width", "pitch_nm", "nuclei_density", "nucleus_radius_mean",
                "nucleus_radius_spread", "fiber_density", "vessel_count", "noise_sigma",
                "warp_amplitude_px", "jitter_nm"});
    get(s, "height", c.phantom.height);
    get(s, "width", c.phantom.width);
    get(s, "pitch_nm", c.phantom.pitch_nm);
    get(s, "nuclei_density", c.phantom.nuclei_density);
    get(s, "nucleus_radius_mean", c.phantom.nucleus_radius_mean);
    get(s, "nucleus_radius_spread", c.phantom.nucleus_radius_spread);
    get(s, "fiber_density", c.phantom.fiber_density);
    get(s, "vessel_count", c.phantom.vessel_count);
    get(s, "noise_sigma", c.phantom.noise_sigma);
    get(s, "warp_amplitude_px", c.phantom.warp_amplitude_px);
    get(s, "jitter_nm", c.phantom.jitter_nm);
  }
  if (j.contains("registration")) {
    const json& s = j["registration"];
    check_keys(s, "registration", {"gate_mean_px", "neighbors"});
    get(s, "gate_mean_px", c.registration.gate_mean_px);
    get(s, "neighbors", c.registration.neighbors);
  }
  if (j.contains("preprocess")) {
    const json& s = j["preprocess"];
    check_keys(s, "preprocess",
               {"low_saturate_pct", "high_saturate_pct", "invert", "hist_match"});
    get(s, "low_saturate_pct", c.preprocess.low_saturate_pct);
    get(s, "high_saturate_pct", c.preprocess.high_saturate_pct);
    get(s, "invert", c.preprocess.invert);
    get(s, "hist_match", c.preprocess.hist_match);
  }
  if (j.contains("tiling")) {
    const json& s = j["tiling"];
    check_keys(s, "tiling",
               {"patch", "train_stride", "infer_stride", "block_px", "train_ratio", "val_ratio"});
    get(s, "patch", c.tiling.patch);
    get(s, "train_stride", c.tiling.train_stride);
    get(s, "infer_stride", c.tiling.infer_stride);
    get(s, "block_px", c.tiling.block_px);
    get(s, "train_ratio", c.tiling.train_ratio);
    get(s, "val_ratio", c.tiling.val_ratio);
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    check_keys(s, "train",
               {"max_epochs", "patience", "lambda_l1", "batch_size", "lr_g", "lr_d", "beta1",
                "beta2", "base_width", "d_base_width", "depth", "norm", "augment_flips"});
    get(s, "max_epochs", c.train.max_epochs);
    get(s, "patience", c.train.patience);
    get(s, "lambda_l1", c.train.lambda_l1);
    get(s, "batch_size", c.train.batch_size);
    get(s, "lr_g", c.train.lr_g);
    get(s, "lr_d", c.train.lr_d);
    get(s, "beta1", c.train.beta1);
    get(s, "beta2", c.train.beta2);
    get(s, "base_width", c.train.base_width);
    get(s, "d_base_width", c.train.d_base_width);
    get(s, "depth", c.train.depth);
    get(s, "norm", c.train.norm);
    get(s, "augment_flips", c.train.augment_flips);
  }
  if (j.contains("eval")) {
    const json& s = j["eval"];
    check_keys(s, "eval", {"n_patches", "patch_px"});
    get(s, "n_patches", c.eval.n_patches);
    get(s, "patch_px", c.eval.patch_px);
  }

  if (c.train.max_epochs < 1 || c.train.max_epochs > 500)
    throw BadInputError("train.max_epochs must be in [1, 500]");
  if (c.train.patience < 1) throw BadInputError("train.patience must be >= 1");
  if (c.train.lambda_l1 < 0) throw BadInputError("train.lambda_l1 must be >= 0");
  if (c.train.norm != "instance" && c.train.norm != "batch")
    throw BadInputError("train.norm must be 'instance' or 'batch'");
  const double sat = c.preprocess.low_saturate_pct + c.preprocess.high_saturate_pct;
  if (c.preprocess.low_saturate_pct < 0 || c.preprocess.high_saturate_pct < 0 || sat >= 100.0)
    throw BadInputError("preprocess saturation percentages must satisfy 0 <= low + high < 100");
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInputError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadInputError("cannot write config: " + path);
  out << cfg.canonical_text() << "\n";
}

std::string PipelineConfig::canonical_text() const { return to_json(*this).dump(2); }

std::string PipelineConfig::digest() const { return sha256_hex(canonical_text()); }

}  // namespace parstain
