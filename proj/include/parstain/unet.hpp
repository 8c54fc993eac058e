// Encoder-decoder generator with skip connections. Depth downsamplings halve
// the spatial side to 1 for a 2^depth input; each decoder stage consumes the
// concatenation of the deeper output and the mirrored encoder activation.
#pragma once

#include <random>
#include <vector>

#include "parstain/layers.hpp"

namespace parstain {

struct GeneratorConfig {
  int in_channels = 3;
  int out_channels = 3;
  int base_width = 64;
  int depth = 8;
  NormKind norm = NormKind::instance;
};

template <typename T>
struct UNetT {
  GeneratorConfig cfg;
  std::vector<Conv2dT<T>> enc;
  std::vector<ConvTranspose2dT<T>> dec;
  std::vector<Norm2dT<T>> enc_norm, dec_norm;
  std::vector<LeakyReLUT<T>> enc_act;  // slope 0.2, before enc convs 1..D-1
  std::vector<LeakyReLUT<T>> dec_act;  // slope 0 (plain ReLU), before each dec conv
  Tanh01T<T> out_act;
  std::vector<bool> has_enc_norm;

  // forward caches for backward
  std::vector<TensorT<T>> e_out;
  std::vector<int> cat_first;

  explicit UNetT(const GeneratorConfig& c) : cfg(c) {
    const int d = cfg.depth;
    if (d < 1) throw BadInputError("generator depth must be >= 1");
    std::vector<int> widths(d);
    for (int i = 0; i < d; ++i) {
      const long w = static_cast<long>(cfg.base_width) << i;
      const long cap = static_cast<long>(cfg.base_width) * 8;
      widths[i] = static_cast<int>(w < cap ? w : cap);
    }
    enc.resize(d);
    has_enc_norm.assign(d, false);
    enc_norm.resize(d);
    for (int i = 0; i < d; ++i) {
      const int cin = i == 0 ? cfg.in_channels : widths[i - 1];
      enc[i].init(cin, widths[i], 4, 2, 1);
      if (i >= 1 && i <= d - 2) {
        has_enc_norm[i] = true;
        enc_norm[i].init(cfg.norm, widths[i]);
      }
    }
    enc_act.resize(d >= 1 ? d - 1 : 0);
    dec.resize(d);
    dec_norm.resize(d);
    dec_act.resize(d);
    for (int j = 0; j < d; ++j) {
      const int cin = j == 0 ? widths[d - 1] : 2 * widths[d - 1 - j];
      const int cout = j == d - 1 ? cfg.out_channels : widths[d - 2 - j];
      dec[j].init(cin, cout, 4, 2, 1);
      dec_act[j].slope = T(0);
      if (j <= d - 2) dec_norm[j].init(cfg.norm, cout);
    }
  }

  void init_params(std::mt19937_64& rng) {
    for (auto& l : enc) l.init_params(rng);
    for (int i = 0; i < cfg.depth; ++i)
      if (has_enc_norm[i]) enc_norm[i].init_params(rng);
    for (int j = 0; j < cfg.depth; ++j) {
      dec[j].init_params(rng);
      if (j <= cfg.depth - 2) dec_norm[j].init_params(rng);
    }
  }

  void set_training(bool on) {
    for (auto& n : enc_norm) n.training = on;
    for (auto& n : dec_norm) n.training = on;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (int i = 0; i < cfg.depth; ++i) {
      enc[i].collect("enc" + std::to_string(i), out);
      if (has_enc_norm[i]) enc_norm[i].collect("enc_norm" + std::to_string(i), out);
    }
    for (int j = 0; j < cfg.depth; ++j) {
      dec[j].collect("dec" + std::to_string(j), out);
      if (j <= cfg.depth - 2) dec_norm[j].collect("dec_norm" + std::to_string(j), out);
    }
    return out;
  }

  void check_input(const TensorT<T>& x) const {
    const int side = 1 << cfg.depth;
    if (x.c != cfg.in_channels) throw BadInputError("generator: wrong input channel count");
    if (x.h < side || x.w < side || x.h % side != 0 || x.w % side != 0)
      throw BadInputError("generator: spatial side must be a positive multiple of 2^depth");
  }

  TensorT<T> forward(const TensorT<T>& x) {
    check_input(x);
    const int d = cfg.depth;
    e_out.assign(d, TensorT<T>());
    cat_first.assign(d, 0);
    e_out[0] = enc[0].forward(x);
    for (int i = 1; i < d; ++i) {
      TensorT<T> a = enc_act[i - 1].forward(e_out[i - 1]);
      TensorT<T> c = enc[i].forward(a);
      e_out[i] = has_enc_norm[i] ? enc_norm[i].forward(c) : std::move(c);
    }
    TensorT<T> cur = e_out[d - 1];
    for (int j = 0; j < d; ++j) {
      TensorT<T> a = dec_act[j].forward(cur);
      TensorT<T> c = dec[j].forward(a);
      if (j <= d - 2) {
        c = dec_norm[j].forward(c);
        cat_first[j] = c.c;
        cur = concat_channels(c, e_out[d - 2 - j]);
      } else {
        cur = out_act.forward(c);
      }
    }
    return cur;
  }

  // Returns gradient w.r.t. the network input.
  TensorT<T> backward(const TensorT<T>& dy) {
    const int d = cfg.depth;
    std::vector<TensorT<T>> skip_grad(d);
    TensorT<T> g = out_act.backward(dy);
    g = dec[d - 1].backward(g);
    g = dec_act[d - 1].backward(g);
    for (int j = d - 2; j >= 0; --j) {
      // g is the gradient at cat(dec_norm[j] output, e_out[d-2-j])
      TensorT<T> gc, gs;
      split_channels(g, cat_first[j], gc, gs);
      skip_grad[d - 2 - j] = std::move(gs);
      gc = dec_norm[j].backward(gc);
      gc = dec[j].backward(gc);
      g = dec_act[j].backward(gc);
    }
    // g is now the gradient at e_out[d-1]
    for (int i = d - 1; i >= 1; --i) {
      TensorT<T> t = has_enc_norm[i] ? enc_norm[i].backward(g) : std::move(g);
      t = enc[i].backward(t);
      t = enc_act[i - 1].backward(t);
      if (skip_grad[i - 1].size() > 0) {
        for (std::size_t p = 0; p < t.size(); ++p) t.data[p] += skip_grad[i - 1].data[p];
      }
      g = std::move(t);
    }
    return enc[0].backward(g);
  }
};

using UNet = UNetT<float>;

}  // namespace parstain
