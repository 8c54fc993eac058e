#include "parstain/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "parstain/loss.hpp"

namespace parstain {

namespace {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor flip_tensor(const Tensor& t, bool flip_h, bool flip_v) {
  if (!flip_h && !flip_v) return t;
  Tensor out(t.n, t.c, t.h, t.w);
  for (int i = 0; i < t.n; ++i) {
    for (int c = 0; c < t.c; ++c) {
      const float* src = t.sample(i) + static_cast<std::size_t>(c) * t.plane();
      float* dst = out.sample(i) + static_cast<std::size_t>(c) * t.plane();
      for (int y = 0; y < t.h; ++y) {
        const int sy = flip_v ? t.h - 1 - y : y;
        for (int x = 0; x < t.w; ++x) {
          const int sx = flip_h ? t.w - 1 - x : x;
          dst[static_cast<std::size_t>(y) * t.w + x] = src[static_cast<std::size_t>(sy) * t.w + sx];
        }
      }
    }
  }
  return out;
}

Tensor gather_batch(const std::vector<Tensor>& pool, const std::vector<std::size_t>& idx,
                    std::size_t first, std::size_t count) {
  const Tensor& proto = pool[idx[first]];
  Tensor out(static_cast<int>(count), proto.c, proto.h, proto.w);
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor& src = pool[idx[first + i]];
    std::copy(src.data.begin(), src.data.end(), out.sample(static_cast<int>(i)));
  }
  return out;
}

double generator_objective(UNet& g, PatchDiscriminator& d, const PairedPatches& set,
                           double lambda_l1) {
  double acc = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    Tensor fake = g.forward(set.inputs[i]);
    Tensor scores = d.forward(concat_channels(set.inputs[i], fake));
    acc += bce_with_logits(scores, 1.0f) + lambda_l1 * l1_loss(fake, set.labels[i]);
  }
  return acc / static_cast<double>(set.size());
}

}  // namespace

TrainConfig TrainConfig::from_section(const TrainSection& s, std::int64_t seed) {
  TrainConfig cfg;
  cfg.max_epochs = s.max_epochs;
  cfg.patience = s.patience;
  cfg.lambda_l1 = s.lambda_l1;
  cfg.batch_size = s.batch_size;
  cfg.lr_g = s.lr_g;
  cfg.lr_d = s.lr_d;
  cfg.beta1 = s.beta1;
  cfg.beta2 = s.beta2;
  cfg.seed = seed;
  cfg.augment_flips = s.augment_flips;
  cfg.generator.base_width = s.base_width;
  cfg.generator.depth = s.depth;
  cfg.generator.norm = norm_kind_from_string(s.norm);
  cfg.discriminator.base_width = s.d_base_width;
  cfg.discriminator.norm = cfg.generator.norm;
  return cfg;
}

UNet make_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  UNet g(cfg);
  std::mt19937_64 rng(mix_seed(seed, 21));
  g.init_params(rng);
  return g;
}

PatchDiscriminator make_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  PatchDiscriminator d(cfg);
  std::mt19937_64 rng(mix_seed(seed, 22));
  d.init_params(rng);
  return d;
}

void save_training_log(const TrainingLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw BadInputError("cannot write training log: " + path);
  std::fprintf(f, "# epoch g_loss d_loss val_loss wall_s\n");
  for (const auto& e : log.epochs)
    std::fprintf(f, "%d %.6f %.6f %.6f %.3f\n", e.epoch, e.g_loss, e.d_loss, e.val_loss, e.wall_s);
  std::fprintf(f, "# best_epoch %d best_val_loss %.6f early_stop %d\n", log.best_epoch,
               log.best_val_loss, log.stopped_early ? 1 : 0);
  std::fclose(f);
}

Checkpoint checkpoint_from_generator(UNet& g, int epoch, double best_val_loss,
                                     const std::string& config_digest) {
  Checkpoint ckpt;
  ckpt.generator = g.cfg;
  ckpt.epoch = epoch;
  ckpt.best_val_loss = best_val_loss;
  ckpt.config_digest = config_digest;
  for (const auto& p : g.params()) ckpt.params.emplace_back(p.name, p.value->data);
  return ckpt;
}

UNet generator_from_checkpoint(const Checkpoint& ckpt) {
  UNet g(ckpt.generator);
  auto refs = g.params();
  if (refs.size() != ckpt.params.size())
    throw BadInputError("checkpoint parameter count does not match generator config");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].name != ckpt.params[i].first ||
        refs[i].value->data.size() != ckpt.params[i].second.size())
      throw BadInputError("checkpoint parameter mismatch at " + ckpt.params[i].first);
    refs[i].value->data = ckpt.params[i].second;
  }
  g.set_training(false);
  return g;
}

TrainResult train(const PairedPatches& train_set, const PairedPatches& val_set,
                  const TrainConfig& cfg) {
  if (train_set.size() == 0 || val_set.size() == 0)
    throw BadInputError("train: train and validation sets must be non-empty");
  if (train_set.inputs.size() != train_set.labels.size() ||
      val_set.inputs.size() != val_set.labels.size())
    throw BadInputError("train: inputs and labels must pair up");
  if (cfg.batch_size < 1) throw BadInputError("train: batch size must be >= 1");
  if (cfg.max_epochs < 1 || cfg.max_epochs > 500)
    throw BadInputError("train: max_epochs must be in [1, 500]");

  UNet g = make_generator(cfg.generator, static_cast<std::uint64_t>(cfg.seed));
  PatchDiscriminator d = make_discriminator(cfg.discriminator, static_cast<std::uint64_t>(cfg.seed));
  auto g_params = g.params();
  auto d_params = d.params();

  Adam opt_g, opt_d;
  opt_g.lr = static_cast<float>(cfg.lr_g);
  opt_g.beta1 = static_cast<float>(cfg.beta1);
  opt_g.beta2 = static_cast<float>(cfg.beta2);
  opt_d.lr = static_cast<float>(cfg.lr_d);
  opt_d.beta1 = static_cast<float>(cfg.beta1);
  opt_d.beta2 = static_cast<float>(cfg.beta2);
  opt_g.attach(g_params);
  opt_d.attach(d_params);

  const float lambda = static_cast<float>(cfg.lambda_l1);
  EarlyStopper stopper(cfg.patience);
  TrainingLog log;
  std::vector<std::pair<std::string, std::vector<float>>> best_params;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(mix_seed(static_cast<std::uint64_t>(cfg.seed), 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double g_loss_acc = 0, d_loss_acc = 0;
    int steps = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - first);
      Tensor x = gather_batch(train_set.inputs, order, first, count);
      Tensor y = gather_batch(train_set.labels, order, first, count);
      if (cfg.augment_flips) {
        const bool fh = rng() & 1, fv = rng() & 1;
        x = flip_tensor(x, fh, fv);
        y = flip_tensor(y, fh, fv);
      }

      Tensor fake = g.forward(x);

      // discriminator step on real and detached fake
      Adam::zero_grads(d_params);
      Tensor s_real = d.forward(concat_channels(x, y));
      const float loss_real = bce_with_logits(s_real, 1.0f);
      d.backward(bce_with_logits_grad(s_real, 1.0f, 0.5f));
      Tensor s_fake = d.forward(concat_channels(x, fake));
      const float loss_fake = bce_with_logits(s_fake, 0.0f);
      d.backward(bce_with_logits_grad(s_fake, 0.0f, 0.5f));
      opt_d.step(d_params);

      // generator step through the updated discriminator
      Adam::zero_grads(g_params);
      Adam::zero_grads(d_params);  // discriminator grads from this pass are discarded
      Tensor s_fake2 = d.forward(concat_channels(x, fake));
      const float g_adv = bce_with_logits(s_fake2, 1.0f);
      const float g_l1 = l1_loss(fake, y);
      Tensor dcat = d.backward(bce_with_logits_grad(s_fake2, 1.0f));
      Tensor dx_unused, dfake;
      split_channels(dcat, x.c, dx_unused, dfake);
      Tensor l1g = l1_loss_grad(fake, y, lambda);
      for (std::size_t i = 0; i < dfake.size(); ++i) dfake.data[i] += l1g.data[i];
      g.backward(dfake);
      opt_g.step(g_params);

      const double g_total = g_adv + lambda * g_l1;
      const double d_total = 0.5 * (loss_real + loss_fake);
      if (!std::isfinite(g_total) || !std::isfinite(d_total))
        throw DivergenceError("training loss became non-finite at epoch " +
                              std::to_string(epoch));
      g_loss_acc += g_total;
      d_loss_acc += d_total;
      ++steps;
    }

    // validation generator objective under inference-mode statistics
    g.set_training(false);
    d.set_training(false);
    const double val_loss = generator_objective(g, d, val_set, cfg.lambda_l1);
    g.set_training(true);
    d.set_training(true);
    if (!std::isfinite(val_loss))
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));

    EpochStats st;
    st.epoch = epoch;
    st.g_loss = g_loss_acc / steps;
    st.d_loss = d_loss_acc / steps;
    st.val_loss = val_loss;
    st.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(st);

    const double prev_best = stopper.best();
    const bool stop = stopper.update(val_loss);
    if (val_loss < prev_best) {
      best_params.clear();
      for (const auto& p : g_params) best_params.emplace_back(p.name, p.value->data);
      log.best_epoch = epoch;
      log.best_val_loss = val_loss;
    }
    if (stop) {
      log.stopped_early = true;
      break;
    }
  }

  TrainResult res;
  res.log = log;
  res.checkpoint.generator = cfg.generator;
  res.checkpoint.epoch = log.best_epoch;
  res.checkpoint.best_val_loss = log.best_val_loss;
  res.checkpoint.params = std::move(best_params);
  return res;
}

Tensor infer_patch(UNet& generator, const Tensor& x) {
  generator.set_training(false);
  return generator.forward(x);
}

Tensor stack_to_tensor(const MultiChannelImage& img) {
  Tensor t(1, 3, img.height(), img.width());
  const std::size_t plane = static_cast<std::size_t>(img.height()) * img.width();
  for (int c = 0; c < 3; ++c)
    std::copy(img.channel(c).pixels.begin(), img.channel(c).pixels.end(), t.data.begin() + c * plane);
  return t;
}

Tensor patch_to_tensor(const std::vector<float>& planar, int channels, int patch) {
  Tensor t(1, channels, patch, patch);
  std::copy(planar.begin(), planar.end(), t.data.begin());
  return t;
}

RGBImage infer_wholeslide_with(const PatchFn& fn, const MultiChannelImage& image, int patch,
                               int stride, Blend blend) {
  image.validate();
  const int h = image.height(), w = image.width();
  const PatchGrid grid = plan_patches(h, w, patch, stride);
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  // tiles are cut one at a time; only the outputs are kept for stitching
  std::vector<std::vector<float>> out_patches(grid.origins.size());
  {
    Tensor x(1, 3, patch, patch);
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
      const auto [r, c] = grid.origins[i];
      for (int ch = 0; ch < 3; ++ch) {
        const std::vector<float>& src = image.channel(ch).pixels;
        for (int y = 0; y < patch; ++y) {
          const float* row = src.data() + static_cast<std::size_t>(r + y) * w + c;
          std::copy(row, row + patch,
                    x.data.begin() + (static_cast<std::size_t>(ch) * patch + y) * patch);
        }
      }
      Tensor y = fn(x);
      if (y.c != 3 || y.h != patch || y.w != patch)
        throw BadInputError("infer_wholeslide: patch function returned wrong shape");
      out_patches[i].assign(y.data.begin(), y.data.end());
    }
  }

  RGBImage out(h, w, image.pitch_nm());
  std::vector<float> planar_out(plane * 3);
  stitch(out_patches, grid, 3, blend, planar_out.data());
  out_patches.clear();
  out_patches.shrink_to_fit();
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) out.pixels[i * 3 + c] = planar_out[c * plane + i];
  return out;
}

RGBImage infer_wholeslide(UNet& generator, const MultiChannelImage& image, int patch, int stride,
                          Blend blend) {
  generator.set_training(false);
  return infer_wholeslide_with(
      [&generator](const Tensor& x) { return generator.forward(x); }, image, patch, stride, blend);
}

}  // namespace parstain
