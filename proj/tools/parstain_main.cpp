// parstain: virtual staining pipeline for multi-contrast label-free
// microscopy. Subcommands cover each stage: phantom generation, H&E
// registration, model training, whole-slide inference, and evaluation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "parstain/pipeline.hpp"

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitGate = 3;
constexpr int kExitDivergence = 4;

struct CommonOpts {
  std::string config_path;
  std::int64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "pipeline configuration (JSON)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "override the config seed");
}

parstain::PipelineConfig resolve_config(const CommonOpts& c) {
  parstain::PipelineConfig cfg;
  if (!c.config_path.empty()) cfg = parstain::load_config(c.config_path);
  if (c.seed_opt->count() > 0) cfg.seed = c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual staining of multi-contrast label-free microscopy images"};
  app.require_subcommand(1);

  // phantom
  auto* cmd_ph = app.add_subcommand("phantom", "generate a synthetic paired dataset");
  CommonOpts ph_common;
  add_common(cmd_ph, ph_common);
  std::string ph_out;
  cmd_ph->add_option("--out", ph_out, "output directory")->required();
  int ph_height = 0, ph_width = 0;
  double ph_noise = -1, ph_warp = -1, ph_jitter = -1;
  auto* o_h = cmd_ph->add_option("--height", ph_height, "phantom height (px)");
  auto* o_w = cmd_ph->add_option("--width", ph_width, "phantom width (px)");
  auto* o_n = cmd_ph->add_option("--noise-sigma", ph_noise, "additive noise sigma");
  auto* o_wa = cmd_ph->add_option("--warp-amplitude", ph_warp, "label warp amplitude (px)");
  auto* o_j = cmd_ph->add_option("--jitter-nm", ph_jitter, "scan stage jitter (nm)");

  // register
  auto* cmd_reg = app.add_subcommand("register", "co-register a label image onto a reference");
  CommonOpts reg_common;
  add_common(cmd_reg, reg_common);
  std::string reg_ref, reg_mov, reg_pts, reg_out;
  double reg_gate = -1;
  cmd_reg->add_option("--reference", reg_ref, "reference channel image (PNG)")->required();
  cmd_reg->add_option("--moving", reg_mov, "moving RGB image (PNG)")->required();
  cmd_reg->add_option("--points", reg_pts, "control point file (CSV)")->required();
  cmd_reg->add_option("--out", reg_out, "output directory")->required();
  auto* o_gate = cmd_reg->add_option("--gate-px", reg_gate, "mean residual gate (px)");

  // train
  auto* cmd_tr = app.add_subcommand("train", "train the colorization model");
  CommonOpts tr_common;
  add_common(cmd_tr, tr_common);
  std::string tr_data, tr_out;
  cmd_tr->add_option("--data", tr_data, "directory with nr/rad/sc/he PNGs")->required();
  cmd_tr->add_option("--out", tr_out, "output directory")->required();
  int tr_max_epochs = 0, tr_patience = 0, tr_batch = 0, tr_width = 0, tr_dwidth = 0, tr_depth = 0;
  int tr_patch = 0, tr_stride = 0, tr_block = 0;
  double tr_lambda = -1, tr_lr_g = -1, tr_lr_d = -1, tr_beta1 = -1, tr_beta2 = -1;
  std::string tr_norm;
  bool tr_flips = true;
  auto* o_me = cmd_tr->add_option("--max-epochs", tr_max_epochs, "epoch cap (<= 500)");
  auto* o_pa = cmd_tr->add_option("--patience", tr_patience, "early stopping patience");
  auto* o_la = cmd_tr->add_option("--lambda-l1", tr_lambda, "L1 weight in the objective");
  auto* o_bs = cmd_tr->add_option("--batch-size", tr_batch, "batch size");
  auto* o_lg = cmd_tr->add_option("--lr-g", tr_lr_g, "generator step size");
  auto* o_ld = cmd_tr->add_option("--lr-d", tr_lr_d, "discriminator step size");
  auto* o_b1 = cmd_tr->add_option("--beta1", tr_beta1, "first-moment decay");
  auto* o_b2 = cmd_tr->add_option("--beta2", tr_beta2, "second-moment decay");
  auto* o_bw = cmd_tr->add_option("--base-width", tr_width, "generator base width");
  auto* o_dw = cmd_tr->add_option("--d-base-width", tr_dwidth, "discriminator base width");
  auto* o_dp = cmd_tr->add_option("--depth", tr_depth, "generator downsampling depth");
  auto* o_no = cmd_tr->add_option("--norm", tr_norm, "normalization: instance|batch");
  auto* o_fl = cmd_tr->add_flag("--augment-flips,!--no-augment-flips", tr_flips,
                                "horizontal/vertical flip augmentation");
  auto* o_tp = cmd_tr->add_option("--patch", tr_patch, "training patch size");
  auto* o_ts = cmd_tr->add_option("--train-stride", tr_stride, "patch extraction stride");
  auto* o_tb = cmd_tr->add_option("--block-px", tr_block, "spatial split block size");

  // infer
  auto* cmd_in = app.add_subcommand("infer", "virtually stain a whole slide");
  std::string in_ckpt, in_data, in_out, in_manifest;
  int in_stride = 128;
  cmd_in->add_option("--checkpoint", in_ckpt, "trained checkpoint")->required();
  cmd_in->add_option("--data", in_data, "directory with nr/rad/sc PNGs")->required();
  cmd_in->add_option("--out", in_out, "output PNG path")->required();
  cmd_in->add_option("--stride", in_stride, "tile stride (~50% overlap by default)");
  cmd_in->add_option("--manifest", in_manifest, "optional manifest path");

  // eval
  auto* cmd_ev = app.add_subcommand("eval", "evaluate a virtual stain against ground truth");
  CommonOpts ev_common;
  add_common(cmd_ev, ev_common);
  std::string ev_pred, ev_truth, ev_out, ev_panel;
  int ev_n = 0, ev_patch = 0;
  cmd_ev->add_option("--pred", ev_pred, "prediction PNG")->required();
  cmd_ev->add_option("--truth", ev_truth, "ground truth PNG")->required();
  cmd_ev->add_option("--out", ev_out, "output directory")->required();
  auto* o_en = cmd_ev->add_option("--n-patches", ev_n, "number of sampled patches");
  auto* o_ep = cmd_ev->add_option("--patch-px", ev_patch, "patch side length");
  cmd_ev->add_option("--panel-input", ev_panel, "channel directory for a comparison panel");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_ph->parsed()) {
      parstain::PipelineConfig cfg = resolve_config(ph_common);
      if (o_h->count()) cfg.phantom.height = ph_height;
      if (o_w->count()) cfg.phantom.width = ph_width;
      if (o_n->count()) cfg.phantom.noise_sigma = ph_noise;
      if (o_wa->count()) cfg.phantom.warp_amplitude_px = ph_warp;
      if (o_j->count()) cfg.phantom.jitter_nm = ph_jitter;
      parstain::cmd_phantom(cfg, ph_out);
      std::printf("phantom dataset written to %s\n", ph_out.c_str());
    } else if (cmd_reg->parsed()) {
      parstain::PipelineConfig cfg = resolve_config(reg_common);
      if (o_gate->count()) cfg.registration.gate_mean_px = reg_gate;
      parstain::cmd_register(cfg, reg_ref, reg_mov, reg_pts, reg_out);
      std::printf("registered image written to %s\n", reg_out.c_str());
    } else if (cmd_tr->parsed()) {
      parstain::PipelineConfig cfg = resolve_config(tr_common);
      if (o_me->count()) cfg.train.max_epochs = tr_max_epochs;
      if (o_pa->count()) cfg.train.patience = tr_patience;
      if (o_la->count()) cfg.train.lambda_l1 = tr_lambda;
      if (o_bs->count()) cfg.train.batch_size = tr_batch;
      if (o_lg->count()) cfg.train.lr_g = tr_lr_g;
      if (o_ld->count()) cfg.train.lr_d = tr_lr_d;
      if (o_b1->count()) cfg.train.beta1 = tr_beta1;
      if (o_b2->count()) cfg.train.beta2 = tr_beta2;
      if (o_bw->count()) cfg.train.base_width = tr_width;
      if (o_dw->count()) cfg.train.d_base_width = tr_dwidth;
      if (o_dp->count()) cfg.train.depth = tr_depth;
      if (o_no->count()) cfg.train.norm = tr_norm;
      if (o_fl->count()) cfg.train.augment_flips = tr_flips;
      if (o_tp->count()) cfg.tiling.patch = tr_patch;
      if (o_ts->count()) cfg.tiling.train_stride = tr_stride;
      if (o_tb->count()) cfg.tiling.block_px = tr_block;
      parstain::cmd_train(cfg, tr_data, tr_out);
      std::printf("checkpoint written to %s\n", tr_out.c_str());
    } else if (cmd_in->parsed()) {
      parstain::cmd_infer(in_ckpt, in_data, in_out, in_stride, in_manifest);
      std::printf("virtual stain written to %s\n", in_out.c_str());
    } else if (cmd_ev->parsed()) {
      parstain::PipelineConfig cfg = resolve_config(ev_common);
      if (o_en->count()) cfg.eval.n_patches = ev_n;
      if (o_ep->count()) cfg.eval.patch_px = ev_patch;
      const parstain::MetricsReport r =
          parstain::cmd_eval(cfg, ev_pred, ev_truth, ev_out, ev_panel);
      std::printf("ssim: %.4f +/- %.4f\nrmse: %.4f +/- %.4f\n", r.ssim_mean, r.ssim_std,
                  r.rmse_mean, r.rmse_std);
    }
  } catch (const parstain::GateError& e) {
    std::cerr << "gate failure: " << e.what() << "\n";
    return kExitGate;
  } catch (const parstain::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const parstain::BadInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}
