// Patch-level discriminator: C64-C128-C256-C512 + 1-channel head, kernel 4,
// strides 2,2,2,1,1. Receptive field 70x70; emits a logit score map
// (30x30 for a 256x256 input). Input is the 6-channel concatenation of the
// conditioning image and the real or generated candidate.
#pragma once

#include <random>
#include <vector>

#include "parstain/layers.hpp"

namespace parstain {

struct DiscriminatorConfig {
  int in_channels = 6;
  int base_width = 64;
  NormKind norm = NormKind::instance;
};

template <typename T>
struct PatchDiscriminatorT {
  DiscriminatorConfig cfg;
  std::vector<Conv2dT<T>> conv;
  std::vector<Norm2dT<T>> norm;
  std::vector<LeakyReLUT<T>> act;
  std::vector<bool> has_norm;

  explicit PatchDiscriminatorT(const DiscriminatorConfig& c) : cfg(c) {
    const int b = cfg.base_width;
    const int chans[6] = {cfg.in_channels, b, 2 * b, 4 * b, 8 * b, 1};
    const int strides[5] = {2, 2, 2, 1, 1};
    conv.resize(5);
    norm.resize(5);
    act.resize(4);
    has_norm.assign(5, false);
    for (int i = 0; i < 5; ++i) {
      conv[i].init(chans[i], chans[i + 1], 4, strides[i], 1);
      if (i >= 1 && i <= 3) {
        has_norm[i] = true;
        norm[i].init(cfg.norm, chans[i + 1]);
      }
    }
  }

  void init_params(std::mt19937_64& rng) {
    for (int i = 0; i < 5; ++i) {
      conv[i].init_params(rng);
      if (has_norm[i]) norm[i].init_params(rng);
    }
  }

  void set_training(bool on) {
    for (auto& n : norm) n.training = on;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (int i = 0; i < 5; ++i) {
      conv[i].collect("d_conv" + std::to_string(i), out);
      if (has_norm[i]) norm[i].collect("d_norm" + std::to_string(i), out);
    }
    return out;
  }

  // Returns the logit score map.
  TensorT<T> forward(const TensorT<T>& x) {
    TensorT<T> cur = x;
    for (int i = 0; i < 5; ++i) {
      cur = conv[i].forward(cur);
      if (has_norm[i]) cur = norm[i].forward(cur);
      if (i < 4) cur = act[i].forward(cur);
    }
    return cur;
  }

  // Gradient w.r.t. the 6-channel input; parameter gradients accumulate.
  TensorT<T> backward(const TensorT<T>& dscores) {
    TensorT<T> g = dscores;
    for (int i = 4; i >= 0; --i) {
      if (i < 4) g = act[i].backward(g);
      if (has_norm[i]) g = norm[i].backward(g);
      g = conv[i].backward(g);
    }
    return g;
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->zero();
  }
};

using PatchDiscriminator = PatchDiscriminatorT<float>;

}  // namespace parstain
