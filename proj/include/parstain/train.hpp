// Adversarial training loop: alternating discriminator/generator Adam steps
// per batch, per-epoch validation of the generator objective, early stopping
// on the best validation loss, best-epoch checkpointing.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "parstain/adam.hpp"
#include "parstain/config.hpp"
#include "parstain/image.hpp"
#include "parstain/patchgan.hpp"
#include "parstain/tiling.hpp"
#include "parstain/unet.hpp"

namespace parstain {

struct TrainConfig {
  int max_epochs = 500;
  int patience = 20;
  double lambda_l1 = 100.0;
  int batch_size = 1;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::int64_t seed = 0;
  bool augment_flips = true;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  static TrainConfig from_section(const TrainSection& s, std::int64_t seed);
};

UNet make_generator(const GeneratorConfig& cfg, std::uint64_t seed);
PatchDiscriminator make_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

// Paired pixel-aligned patches; x is the 3-channel conditioned input stack,
// y the RGB label, both [0,1].
struct PairedPatches {
  std::vector<Tensor> inputs;
  std::vector<Tensor> labels;

  std::size_t size() const { return inputs.size(); }
};

struct EpochStats {
  int epoch = 0;
  double g_loss = 0;
  double d_loss = 0;
  double val_loss = 0;
  double wall_s = 0;
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_loss = 0;
  bool stopped_early = false;
};

void save_training_log(const TrainingLog& log, const std::string& path);

// Stops when the monitored loss has not improved for `patience` epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw BadInputError("patience must be >= 1");
  }

  // Feeds one epoch's loss; returns true when training should stop.
  bool update(double loss) {
    if (loss < best_) {
      best_ = loss;
      best_epoch_ = epochs_seen_;
      stale_ = 0;
    } else {
      ++stale_;
    }
    ++epochs_seen_;
    return stale_ >= patience_;
  }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int stale_ = 0;
  int epochs_seen_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct Checkpoint {
  GeneratorConfig generator;
  int epoch = 0;
  double best_val_loss = 0;
  std::string config_digest;
  bool has_ref_cdf = false;
  std::array<double, 256> ref_cdf{};  // histogram-match reference, if used
  std::vector<std::pair<std::string, std::vector<float>>> params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds a generator in inference mode from checkpoint parameters.
UNet generator_from_checkpoint(const Checkpoint& ckpt);
Checkpoint checkpoint_from_generator(UNet& g, int epoch, double best_val_loss,
                                     const std::string& config_digest);

struct TrainResult {
  Checkpoint checkpoint;
  TrainingLog log;
};

TrainResult train(const PairedPatches& train_set, const PairedPatches& val_set,
                  const TrainConfig& cfg);

// Deterministic forward pass of one 3-channel patch; output in [0,1].
Tensor infer_patch(UNet& generator, const Tensor& x);

using PatchFn = std::function<Tensor(const Tensor&)>;

// plan -> per-tile inference -> feathered stitch; output shape == input shape.
RGBImage infer_wholeslide(UNet& generator, const MultiChannelImage& image, int patch, int stride,
                          Blend blend = Blend::hann);
RGBImage infer_wholeslide_with(const PatchFn& fn, const MultiChannelImage& image, int patch,
                               int stride, Blend blend = Blend::hann);

Tensor stack_to_tensor(const MultiChannelImage& img);
Tensor patch_to_tensor(const std::vector<float>& planar, int channels, int patch);

}  // namespace parstain
