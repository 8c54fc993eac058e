#pragma once

#include <cmath>
#include <vector>

#include "parstain/kernels.hpp"
#include "parstain/tensor.hpp"

namespace parstain {

template <typename T>
struct AdamT {
  T lr = T(2e-4);
  T beta1 = T(0.5);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  long step_count = 0;
  std::vector<TensorT<T>> m, v;

  void attach(const std::vector<ParamRef<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
      v.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
    }
  }

  void step(const std::vector<ParamRef<T>>& params) {
    ++step_count;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), step_count));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      kernels::adam_step(params[i].value->size(), lr, beta1, beta2, eps, bc1, bc2,
                         params[i].grad->data.data(), m[i].data.data(), v[i].data.data(),
                         params[i].value->data.data());
    }
  }

  static void zero_grads(const std::vector<ParamRef<T>>& params) {
    for (const auto& p : params) p.grad->zero();
  }
};

using Adam = AdamT<float>;

}  // namespace parstain
