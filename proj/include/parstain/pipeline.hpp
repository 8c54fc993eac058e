// Stage orchestration behind the CLI subcommands: each function loads its
// inputs, runs one pipeline stage, and persists outputs plus a run manifest.
#pragma once

#include <string>

#include "parstain/config.hpp"
#include "parstain/metrics.hpp"

namespace parstain {

// Writes the simulated acquisition (3 reconstructed channel images, clean and
// warped labels, a channel composite), the per-pulse scan records, control
// points for the warp, and the run manifest.
void cmd_phantom(const PipelineConfig& cfg, const std::string& out_dir);

// Field-of-view matching plus control-point registration of `moving_path`
// onto `reference_path`; trips the residual gate per config.
void cmd_register(const PipelineConfig& cfg, const std::string& reference_path,
                  const std::string& moving_path, const std::string& points_path,
                  const std::string& out_dir);

// Expects data_dir with nr.png / rad.png / sc.png / he.png (pixel aligned).
void cmd_train(const PipelineConfig& cfg, const std::string& data_dir,
               const std::string& out_dir);

void cmd_infer(const std::string& checkpoint_path, const std::string& data_dir,
               const std::string& out_path, int stride, const std::string& manifest_path = "");

MetricsReport cmd_eval(const PipelineConfig& cfg, const std::string& pred_path,
                       const std::string& truth_path, const std::string& out_dir,
                       const std::string& panel_input_dir = "");

}  // namespace parstain
