// Pix2Pix objective pieces: sigmoid cross-entropy on discriminator logit
// maps plus an L1 reconstruction term weighted by lambda. Gradients are
// means over all elements, matching the loss values.
#pragma once

#include <cmath>

#include "parstain/tensor.hpp"

namespace parstain {

// Numerically stable BCE with logits against a constant target.
template <typename T>
T bce_with_logits(const TensorT<T>& z, T target) {
  double acc = 0.0;
  for (const T v : z.data) {
    const double zd = v;
    acc += std::max(zd, 0.0) - zd * static_cast<double>(target) + std::log1p(std::exp(-std::abs(zd)));
  }
  return static_cast<T>(acc / z.size());
}

template <typename T>
TensorT<T> bce_with_logits_grad(const TensorT<T>& z, T target, T scale = T(1)) {
  TensorT<T> g(z.n, z.c, z.h, z.w);
  const T inv = scale / static_cast<T>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(z.data[i])));
    g.data[i] = (static_cast<T>(s) - target) * inv;
  }
  return g;
}

template <typename T>
T l1_loss(const TensorT<T>& a, const TensorT<T>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
  return static_cast<T>(acc / a.size());
}

// d/da mean|a - b|, scaled (sign convention: grad of the loss w.r.t. a).
template <typename T>
TensorT<T> l1_loss_grad(const TensorT<T>& a, const TensorT<T>& b, T scale = T(1)) {
  TensorT<T> g(a.n, a.c, a.h, a.w);
  const T inv = scale / static_cast<T>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a.data[i] - b.data[i];
    g.data[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
  return g;
}

struct LossTerms {
  double g_adv = 0.0;
  double g_l1 = 0.0;
  double g_total = 0.0;
  double d_real = 0.0;
  double d_fake = 0.0;
  double d_total = 0.0;
};

// Scalar objective values for one step:
//   d_loss = (bce(d_real, 1) + bce(d_fake, 0)) / 2
//   g_loss = bce(d_fake, 1) + lambda_l1 * mean|generated - target|
template <typename T>
LossTerms loss_terms(const TensorT<T>& generated, const TensorT<T>& target,
                     const TensorT<T>& d_real_scores, const TensorT<T>& d_fake_scores,
                     double lambda_l1) {
  LossTerms t;
  t.d_real = bce_with_logits(d_real_scores, T(1));
  t.d_fake = bce_with_logits(d_fake_scores, T(0));
  t.d_total = 0.5 * (t.d_real + t.d_fake);
  t.g_adv = bce_with_logits(d_fake_scores, T(1));
  t.g_l1 = l1_loss(generated, target);
  t.g_total = t.g_adv + lambda_l1 * t.g_l1;
  return t;
}

}  // namespace parstain
