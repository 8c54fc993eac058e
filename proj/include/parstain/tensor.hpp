#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace parstain {

// Dense NCHW tensor. Training uses float; gradient-check tests instantiate
// the whole model stack with double.
template <typename T>
struct TensorT {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  TensorT() = default;
  TensorT(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t size() const { return data.size(); }
  int plane() const { return h * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  T* sample(int i) { return data.data() + sample_size() * i; }
  const T* sample(int i) const { return data.data() + sample_size() * i; }

  bool same_shape(const TensorT& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  void fill_normal(std::mt19937_64& rng, T mean, T stddev) {
    std::normal_distribution<double> d(mean, stddev);
    for (auto& v : data) v = static_cast<T>(d(rng));
  }
};

using Tensor = TensorT<float>;

// Named view of a trainable parameter and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  TensorT<T>* value = nullptr;
  TensorT<T>* grad = nullptr;
};

}  // namespace parstain
