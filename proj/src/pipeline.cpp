#include "parstain/pipeline.hpp"

#include <filesystem>

#include "parstain/image_io.hpp"
#include "parstain/manifest.hpp"
#include "parstain/phantom.hpp"
#include "parstain/preprocess.hpp"
#include "parstain/registration.hpp"
#include "parstain/train.hpp"

namespace parstain {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BadInputError("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

PhantomSpec spec_from_config(const PipelineConfig& cfg) {
  PhantomSpec spec;
  spec.height = cfg.phantom.height;
  spec.width = cfg.phantom.width;
  spec.pitch_nm = cfg.phantom.pitch_nm;
  spec.nuclei_density = cfg.phantom.nuclei_density;
  spec.nucleus_radius_mean = cfg.phantom.nucleus_radius_mean;
  spec.nucleus_radius_spread = cfg.phantom.nucleus_radius_spread;
  spec.fiber_density = cfg.phantom.fiber_density;
  spec.vessel_count = cfg.phantom.vessel_count;
  spec.noise_sigma = cfg.phantom.noise_sigma;
  return spec;
}

RunManifest base_manifest(const PipelineConfig& cfg) {
  RunManifest m;
  m.seed = cfg.seed;
  m.config_digest = cfg.digest();
  m.created = now_iso8601();
  return m;
}

// Build pixel-aligned training pairs from the conditioned stack and label.
void build_pairs(const MultiChannelImage& stack, const RGBImage& he, const PatchGrid& grid,
                 const SplitAssignment& split, PairedPatches& train_set, PairedPatches& val_set) {
  const int h = stack.height(), w = stack.width();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<float> in_planar(plane * 3), lab_planar(plane * 3);
  for (int c = 0; c < 3; ++c)
    std::copy(stack.channel(c).pixels.begin(), stack.channel(c).pixels.end(),
              in_planar.begin() + c * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) lab_planar[c * plane + i] = he.pixels[i * 3 + c];

  const auto in_patches = extract_patches(in_planar.data(), h, w, 3, grid);
  const auto lab_patches = extract_patches(lab_planar.data(), h, w, 3, grid);
  for (std::size_t i = 0; i < grid.origins.size(); ++i) {
    const Split s = split.for_patch(grid, i);
    PairedPatches* dst = s == Split::train ? &train_set : (s == Split::val ? &val_set : nullptr);
    if (!dst) continue;
    dst->inputs.push_back(patch_to_tensor(in_patches[i], 3, grid.patch));
    dst->labels.push_back(patch_to_tensor(lab_patches[i], 3, grid.patch));
  }
}

}  // namespace

void cmd_phantom(const PipelineConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const PhantomSpec spec = spec_from_config(cfg);
  const HePalette palette;
  auto [truth, he] = generate_phantom(spec, static_cast<std::uint64_t>(cfg.seed), palette);

  GridSpec grid;
  grid.height = spec.height;
  grid.width = spec.width;
  grid.pitch_nm = spec.pitch_nm;
  const auto records =
      simulate_scan(truth, grid, cfg.phantom.jitter_nm, static_cast<std::uint64_t>(cfg.seed));
  const MultiChannelImage acquired = reconstruct_grid(records, grid);

  const auto warped =
      warp_pair(he, cfg.phantom.warp_amplitude_px, static_cast<std::uint64_t>(cfg.seed));

  save_image(acquired.non_radiative, join(out_dir, "nr.png"));
  save_image(acquired.radiative, join(out_dir, "rad.png"));
  save_image(acquired.scattering, join(out_dir, "sc.png"));
  save_image(he, join(out_dir, "he.png"));
  save_image(warped.warped, join(out_dir, "he_warped.png"));

  RGBImage composite(spec.height, spec.width, spec.pitch_nm);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      composite.at(y, x, 0) = acquired.radiative.at(y, x);
      composite.at(y, x, 1) = acquired.scattering.at(y, x);
      composite.at(y, x, 2) = acquired.non_radiative.at(y, x);
    }
  }
  save_image(composite, join(out_dir, "composite.png"));
  save_scan_records(records, join(out_dir, "scan_records.txt"));
  save_control_points(warped.points, join(out_dir, "control_points.txt"));

  RunManifest m = base_manifest(cfg);
  m.put("stage", std::string("phantom"));
  m.put("phantom.height", static_cast<std::int64_t>(spec.height));
  m.put("phantom.width", static_cast<std::int64_t>(spec.width));
  m.put("phantom.pitch_nm", spec.pitch_nm);
  m.put("phantom.nuclei_density", spec.nuclei_density);
  m.put("phantom.nucleus_radius_mean", spec.nucleus_radius_mean);
  m.put("phantom.nucleus_radius_spread", spec.nucleus_radius_spread);
  m.put("phantom.fiber_density", spec.fiber_density);
  m.put("phantom.vessel_count", static_cast<std::int64_t>(spec.vessel_count));
  m.put("phantom.noise_sigma", spec.noise_sigma);
  m.put("phantom.jitter_nm", cfg.phantom.jitter_nm);
  m.put("phantom.warp_amplitude_px", cfg.phantom.warp_amplitude_px);
  for (int c = 0; c < 3; ++c) {
    m.put("palette.hematoxylin_od" + std::to_string(c), palette.hematoxylin_od[c]);
    m.put("palette.eosin_od" + std::to_string(c), palette.eosin_od[c]);
  }
  m.put("palette.hematoxylin_strength", palette.hematoxylin_strength);
  m.put("palette.eosin_strength", palette.eosin_strength);
  m.put("palette.stroma_eosin", palette.stroma_eosin);
  m.put("palette.envelope_eosin", palette.envelope_eosin);
  m.put("records", static_cast<std::int64_t>(records.size()));
  m.put("digest.nr", digest_pixels(acquired.non_radiative));
  m.put("digest.rad", digest_pixels(acquired.radiative));
  m.put("digest.sc", digest_pixels(acquired.scattering));
  m.put("digest.he", digest_pixels(he));
  m.put("digest.he_warped", digest_pixels(warped.warped));
  write_manifest(m, join(out_dir, "manifest.txt"));
}

void cmd_register(const PipelineConfig& cfg, const std::string& reference_path,
                  const std::string& moving_path, const std::string& points_path,
                  const std::string& out_dir) {
  ensure_dir(out_dir);
  const ChannelImage reference = load_channel(reference_path);
  RGBImage moving = load_rgb(moving_path);
  if (!(moving.pitch_nm > 0)) moving.pitch_nm = reference.pitch_nm;
  moving = match_fov(reference, moving);

  ControlPointSet points = load_control_points(points_path);
  const NonRigidTransform t = fit_nonrigid(points, cfg.registration.neighbors);

  // Residual gate by leave-one-out refits: the transform interpolates its own
  // control points, so in-sample residuals say nothing about consistency.
  double gate_mean = 0;
  double gate_max = 0;
  std::size_t gate_n = 0;
  if (points.size() > 12) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      ControlPointSet rest;
      ControlPointSet held;
      for (std::size_t j = 0; j < points.size(); ++j)
        (j == i ? held : rest).pairs.push_back(points.pairs[j]);
      const NonRigidTransform ti = fit_nonrigid(rest, cfg.registration.neighbors);
      const RegistrationReport r = registration_report(ti, held);
      gate_mean += r.mean_residual_px;
      gate_max = std::max(gate_max, r.max_residual_px);
      ++gate_n;
    }
    gate_mean /= static_cast<double>(gate_n);
  }

  const RGBImage registered = apply_transform(t, moving, reference.height, reference.width);
  save_image(registered, join(out_dir, "he_registered.png"));

  const RegistrationReport in_sample = registration_report(t, points);
  RunManifest m = base_manifest(cfg);
  m.put("stage", std::string("register"));
  m.put("register.points", static_cast<std::int64_t>(points.size()));
  m.put("register.neighbors", static_cast<std::int64_t>(cfg.registration.neighbors));
  m.put("register.in_sample_mean_px", in_sample.mean_residual_px);
  m.put("register.in_sample_max_px", in_sample.max_residual_px);
  m.put("register.loo_mean_px", gate_mean);
  m.put("register.loo_max_px", gate_max);
  m.put("register.degree1_fallbacks", static_cast<std::int64_t>(t.degree1_fallbacks()));
  m.put("register.gate_mean_px", cfg.registration.gate_mean_px);
  m.put("digest.registered", digest_pixels(registered));
  write_manifest(m, join(out_dir, "registration_report.txt"));

  if (gate_n > 0 && gate_mean > cfg.registration.gate_mean_px)
    throw GateError("registration residual gate tripped: leave-one-out mean " +
                    std::to_string(gate_mean) + " px > " +
                    std::to_string(cfg.registration.gate_mean_px) + " px");
}

void cmd_train(const PipelineConfig& cfg, const std::string& data_dir,
               const std::string& out_dir) {
  ensure_dir(out_dir);
  MultiChannelImage raw;
  raw.non_radiative = load_channel(join(data_dir, "nr.png"));
  raw.radiative = load_channel(join(data_dir, "rad.png"));
  raw.scattering = load_channel(join(data_dir, "sc.png"));
  raw.validate();
  const RGBImage he = load_rgb(join(data_dir, "he.png"));
  if (he.height != raw.height() || he.width != raw.width())
    throw BadInputError("train: label shape does not match channels");

  std::array<double, 256> ref_cdf{};
  const bool use_cdf = cfg.preprocess.hist_match;
  if (use_cdf) ref_cdf = channel_cdf(luminance(he));
  const MultiChannelImage stack =
      preprocess_stack(raw, cfg.preprocess, use_cdf ? &ref_cdf : nullptr);

  const PatchGrid grid =
      plan_patches(stack.height(), stack.width(), cfg.tiling.patch, cfg.tiling.train_stride);
  const SplitAssignment split =
      split_dataset(grid, cfg.tiling.train_ratio, cfg.tiling.val_ratio, cfg.tiling.block_px,
                    static_cast<std::uint64_t>(cfg.seed));
  save_split(split, digest_pixels(stack.non_radiative), join(out_dir, "split.txt"));

  PairedPatches train_set, val_set;
  build_pairs(stack, he, grid, split, train_set, val_set);
  if (train_set.size() == 0 || val_set.size() == 0)
    throw BadInputError("train: split produced an empty train or validation set");

  const TrainConfig tcfg = TrainConfig::from_section(cfg.train, cfg.seed);
  TrainResult result = train(train_set, val_set, tcfg);
  result.checkpoint.config_digest = cfg.digest();
  result.checkpoint.has_ref_cdf = use_cdf;
  if (use_cdf) result.checkpoint.ref_cdf = ref_cdf;
  save_checkpoint(result.checkpoint, join(out_dir, "checkpoint.bin"));
  save_training_log(result.log, join(out_dir, "training_log.txt"));

  RunManifest m = base_manifest(cfg);
  m.put("stage", std::string("train"));
  m.put("train.patches", static_cast<std::int64_t>(train_set.size()));
  m.put("val.patches", static_cast<std::int64_t>(val_set.size()));
  m.put("train.best_epoch", static_cast<std::int64_t>(result.log.best_epoch));
  m.put("train.best_val_loss", result.log.best_val_loss);
  m.put("train.epochs_run", static_cast<std::int64_t>(result.log.epochs.size()));
  m.put("train.stopped_early", std::string(result.log.stopped_early ? "true" : "false"));
  m.put("train.lambda_l1", tcfg.lambda_l1);
  m.put("train.batch_size", static_cast<std::int64_t>(tcfg.batch_size));
  m.put("train.lr_g", tcfg.lr_g);
  m.put("train.lr_d", tcfg.lr_d);
  m.put("train.beta1", tcfg.beta1);
  m.put("train.base_width", static_cast<std::int64_t>(tcfg.generator.base_width));
  m.put("train.depth", static_cast<std::int64_t>(tcfg.generator.depth));
  m.put("digest.checkpoint", digest_file(join(out_dir, "checkpoint.bin")));
  write_manifest(m, join(out_dir, "manifest.txt"));
}

void cmd_infer(const std::string& checkpoint_path, const std::string& data_dir,
               const std::string& out_path, int stride, const std::string& manifest_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  UNet g = generator_from_checkpoint(ckpt);

  MultiChannelImage raw;
  raw.non_radiative = load_channel(join(data_dir, "nr.png"));
  raw.radiative = load_channel(join(data_dir, "rad.png"));
  raw.scattering = load_channel(join(data_dir, "sc.png"));
  raw.validate();

  PreprocessSection pp;  // stretch and inversion always apply; CDF from training
  pp.hist_match = ckpt.has_ref_cdf;
  const MultiChannelImage stack =
      preprocess_stack(raw, pp, ckpt.has_ref_cdf ? &ckpt.ref_cdf : nullptr);

  const int patch = 1 << ckpt.generator.depth;
  const RGBImage out = infer_wholeslide(g, stack, patch, stride);
  save_image(out, out_path);

  if (!manifest_path.empty()) {
    RunManifest m;
    m.seed = 0;
    m.config_digest = ckpt.config_digest;
    m.created = now_iso8601();
    m.put("stage", std::string("infer"));
    m.put("infer.stride", static_cast<std::int64_t>(stride));
    m.put("infer.patch", static_cast<std::int64_t>(patch));
    m.put("infer.checkpoint_epoch", static_cast<std::int64_t>(ckpt.epoch));
    m.put("digest.output", digest_pixels(out));
    write_manifest(m, manifest_path);
  }
}

MetricsReport cmd_eval(const PipelineConfig& cfg, const std::string& pred_path,
                       const std::string& truth_path, const std::string& out_dir,
                       const std::string& panel_input_dir) {
  ensure_dir(out_dir);
  const RGBImage pred = load_rgb(pred_path);
  const RGBImage truth = load_rgb(truth_path);
  const MetricsReport report =
      evaluate(pred, truth, cfg.eval.n_patches, cfg.eval.patch_px, cfg.seed);
  write_metrics_report(report, join(out_dir, "metrics.txt"));

  if (!panel_input_dir.empty()) {
    // side-by-side panel: raw composite | prediction | truth
    const ChannelImage nr = load_channel(join(panel_input_dir, "nr.png"));
    const ChannelImage rad = load_channel(join(panel_input_dir, "rad.png"));
    const ChannelImage sc = load_channel(join(panel_input_dir, "sc.png"));
    const int h = pred.height, w = pred.width;
    if (nr.height != h || nr.width != w)
      throw BadInputError("panel input shape does not match prediction");
    RGBImage panel(h, 3 * w + 16);
    for (auto& v : panel.pixels) v = 1.0f;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        panel.at(y, x, 0) = rad.at(y, x);
        panel.at(y, x, 1) = sc.at(y, x);
        panel.at(y, x, 2) = nr.at(y, x);
        for (int c = 0; c < 3; ++c) {
          panel.at(y, w + 8 + x, c) = pred.at(y, x, c);
          panel.at(y, 2 * w + 16 + x, c) = truth.at(y, x, c);
        }
      }
    }
    save_image(panel, join(out_dir, "panel.png"));
  }

  RunManifest m = base_manifest(cfg);
  m.put("stage", std::string("eval"));
  m.put("eval.n_patches", static_cast<std::int64_t>(report.n_patches));
  m.put("eval.patch_px", static_cast<std::int64_t>(report.patch_px));
  m.put("eval.ssim_mean", report.ssim_mean);
  m.put("eval.ssim_std", report.ssim_std);
  m.put("eval.rmse_mean", report.rmse_mean);
  m.put("eval.rmse_std", report.rmse_std);
  m.put("digest.pred", report.pred_digest);
  m.put("digest.truth", report.truth_digest);
  write_manifest(m, join(out_dir, "manifest.txt"));
  return report;
}

}  // namespace parstain
