// Neural-network building blocks with hand-written backward passes on top of
// the im2col/GEMM kernels. Layers cache whatever their backward needs; one
// forward must precede each backward.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "parstain/image.hpp"
#include "parstain/kernels.hpp"
#include "parstain/tensor.hpp"

namespace parstain {

enum class NormKind { none, instance, batch };

inline NormKind norm_kind_from_string(const std::string& s) {
  if (s == "instance") return NormKind::instance;
  if (s == "batch") return NormKind::batch;
  throw BadInputError("unknown norm kind: " + s);
}

namespace detail {
// Shared scratch for im2col buffers; sized to the largest request seen.
template <typename T>
std::vector<T>& workspace(std::size_t need) {
  thread_local std::vector<T> ws;
  if (ws.size() < need) ws.resize(need);
  return ws;
}
}  // namespace detail

// Convolution, square kernel, zero padding. Weight layout [out][in*k*k].
template <typename T>
struct Conv2dT {
  int in_ch = 0, out_ch = 0, kernel = 4, stride = 2, pad = 1;
  TensorT<T> weight, bias, d_weight, d_bias;
  TensorT<T> cached_input;

  Conv2dT() = default;
  Conv2dT(int cin, int cout, int k, int s, int p) { init(cin, cout, k, s, p); }

  void init(int cin, int cout, int k, int s, int p) {
    in_ch = cin;
    out_ch = cout;
    kernel = k;
    stride = s;
    pad = p;
    weight = TensorT<T>(cout, cin, k, k);
    bias = TensorT<T>(1, cout, 1, 1);
    d_weight = TensorT<T>(cout, cin, k, k);
    d_bias = TensorT<T>(1, cout, 1, 1);
  }

  void init_params(std::mt19937_64& rng) {
    weight.fill_normal(rng, T(0), T(0.02));
    bias.zero();
  }

  kernels::ConvShape shape_for(int h, int w) const {
    return kernels::ConvShape{in_ch, h, w, kernel, stride, pad};
  }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != in_ch) throw BadInputError("Conv2d: channel mismatch");
    cached_input = x;
    const auto s = shape_for(x.h, x.w);
    const int oh = s.out_h(), ow = s.out_w();
    if (oh < 1 || ow < 1) throw BadInputError("Conv2d: spatial size too small for kernel");
    TensorT<T> y(x.n, out_ch, oh, ow);
    auto& col = detail::workspace<T>(static_cast<std::size_t>(s.col_rows()) * s.col_cols());
    for (int i = 0; i < x.n; ++i) {
      kernels::im2col(s, x.sample(i), col.data());
      kernels::gemm_nn(out_ch, s.col_cols(), s.col_rows(), weight.data.data(), col.data(),
                       y.sample(i), false);
      kernels::add_bias(out_ch, oh * ow, bias.data.data(), y.sample(i));
    }
    return y;
  }

  // Accumulates parameter gradients, returns gradient w.r.t. input.
  TensorT<T> backward(const TensorT<T>& dy) {
    const TensorT<T>& x = cached_input;
    const auto s = shape_for(x.h, x.w);
    const int cols = s.col_cols(), rows = s.col_rows();
    TensorT<T> dx(x.n, x.c, x.h, x.w);
    auto& col = detail::workspace<T>(static_cast<std::size_t>(rows) * cols * 2);
    T* colbuf = col.data();
    T* dcol = col.data() + static_cast<std::size_t>(rows) * cols;
    for (int i = 0; i < x.n; ++i) {
      kernels::im2col(s, x.sample(i), colbuf);
      // dW += dY * col^T ; db += row sums of dY
      kernels::gemm_nt(out_ch, cols, rows, dy.sample(i), colbuf, d_weight.data.data(), true);
      kernels::bias_grad(out_ch, cols, dy.sample(i), d_bias.data.data());
      // dcol = W^T * dY ; dx = col2im(dcol)
      kernels::gemm_tn(out_ch, cols, rows, weight.data.data(), dy.sample(i), dcol, false);
      kernels::col2im(s, dcol, dx.sample(i));
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &d_weight});
    out.push_back({prefix + ".bias", &bias, &d_bias});
  }
};

// Transposed convolution as the exact adjoint of Conv2d with the same
// geometry: forward uses col2im, backward-data uses im2col.
// Weight layout [in][out*k*k] (the conv weight of the reverse direction).
template <typename T>
struct ConvTranspose2dT {
  int in_ch = 0, out_ch = 0, kernel = 4, stride = 2, pad = 1;
  TensorT<T> weight, bias, d_weight, d_bias;
  TensorT<T> cached_input;

  ConvTranspose2dT() = default;
  ConvTranspose2dT(int cin, int cout, int k, int s, int p) { init(cin, cout, k, s, p); }

  void init(int cin, int cout, int k, int s, int p) {
    in_ch = cin;
    out_ch = cout;
    kernel = k;
    stride = s;
    pad = p;
    weight = TensorT<T>(cin, cout, k, k);
    bias = TensorT<T>(1, cout, 1, 1);
    d_weight = TensorT<T>(cin, cout, k, k);
    d_bias = TensorT<T>(1, cout, 1, 1);
  }

  void init_params(std::mt19937_64& rng) {
    weight.fill_normal(rng, T(0), T(0.02));
    bias.zero();
  }

  int out_h(int in_h) const { return stride * (in_h - 1) + kernel - 2 * pad; }
  int out_w(int in_w) const { return stride * (in_w - 1) + kernel - 2 * pad; }

  // Conv geometry of the reverse direction: "input" is this layer's output.
  kernels::ConvShape reverse_shape(int in_h, int in_w) const {
    return kernels::ConvShape{out_ch, out_h(in_h), out_w(in_w), kernel, stride, pad};
  }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != in_ch) throw BadInputError("ConvTranspose2d: channel mismatch");
    cached_input = x;
    const auto s = reverse_shape(x.h, x.w);
    if (s.out_h() != x.h || s.out_w() != x.w)
      throw BadInputError("ConvTranspose2d: inconsistent geometry");
    TensorT<T> y(x.n, out_ch, s.height, s.width);
    const int rows = s.col_rows(), cols = s.col_cols();
    auto& col = detail::workspace<T>(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < x.n; ++i) {
      // col = W^T(x) viewed through the reverse conv, then scatter to pixels
      kernels::gemm_tn(in_ch, cols, rows, weight.data.data(), x.sample(i), col.data(), false);
      kernels::col2im(s, col.data(), y.sample(i));
      kernels::add_bias(out_ch, s.height * s.width, bias.data.data(), y.sample(i));
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    const TensorT<T>& x = cached_input;
    const auto s = reverse_shape(x.h, x.w);
    const int rows = s.col_rows(), cols = s.col_cols();
    TensorT<T> dx(x.n, x.c, x.h, x.w);
    auto& col = detail::workspace<T>(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < x.n; ++i) {
      kernels::im2col(s, dy.sample(i), col.data());
      // dW += X * col(dY)^T, dx = W * col(dY)
      kernels::gemm_nt(in_ch, cols, rows, x.sample(i), col.data(), d_weight.data.data(), true);
      kernels::gemm_nn(in_ch, cols, rows, weight.data.data(), col.data(), dx.sample(i), false);
      kernels::bias_grad(out_ch, s.height * s.width, dy.sample(i), d_bias.data.data());
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &d_weight});
    out.push_back({prefix + ".bias", &bias, &d_bias});
  }
};

// Affine normalization. Instance mode normalizes each (n, c) plane; batch
// mode normalizes each channel over the whole batch. Batch mode keeps
// running statistics for inference.
template <typename T>
struct Norm2dT {
  NormKind kind = NormKind::instance;
  int channels = 0;
  T eps = T(1e-5);
  T momentum = T(0.1);
  TensorT<T> gamma, beta, d_gamma, d_beta;
  TensorT<T> running_mean, running_var;
  TensorT<T> cached_xhat;
  std::vector<T> cached_istd;
  bool training = true;

  Norm2dT() = default;
  Norm2dT(NormKind k, int ch) { init(k, ch); }

  void init(NormKind k, int ch) {
    kind = k;
    channels = ch;
    gamma = TensorT<T>(1, ch, 1, 1);
    beta = TensorT<T>(1, ch, 1, 1);
    d_gamma = TensorT<T>(1, ch, 1, 1);
    d_beta = TensorT<T>(1, ch, 1, 1);
    running_mean = TensorT<T>(1, ch, 1, 1);
    running_var = TensorT<T>(1, ch, 1, 1);
    for (auto& v : running_var.data) v = T(1);
  }

  void init_params(std::mt19937_64& rng) {
    gamma.fill_normal(rng, T(1), T(0.02));
    beta.zero();
  }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != channels) throw BadInputError("Norm2d: channel mismatch");
    TensorT<T> y(x.n, x.c, x.h, x.w);
    if (kind == NormKind::batch && !training) {
      // normalize with frozen running statistics
      const int plane = x.plane();
      for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
          const T mu = running_mean.data[c];
          const T is = T(1) / std::sqrt(running_var.data[c] + eps);
          const T g = gamma.data[c], b = beta.data[c];
          const T* xs = x.sample(i) + static_cast<std::size_t>(c) * plane;
          T* ys = y.sample(i) + static_cast<std::size_t>(c) * plane;
          for (int p = 0; p < plane; ++p) ys[p] = g * (xs[p] - mu) * is + b;
        }
      }
      return y;
    }

    cached_xhat = TensorT<T>(x.n, x.c, x.h, x.w);
    if (kind == NormKind::instance) {
      const int groups = x.n * x.c;
      std::vector<T> mean(groups);
      cached_istd.assign(groups, T(0));
      kernels::group_norm_forward(groups, x.plane(), eps, x.data.data(),
                                  cached_xhat.data.data(), mean.data(), cached_istd.data());
    } else {
      batch_stats_forward(x);
    }
    // y = gamma * xhat + beta
    const int plane = x.plane();
    for (int i = 0; i < x.n; ++i) {
      for (int c = 0; c < x.c; ++c) {
        const T g = gamma.data[c], b = beta.data[c];
        const T* hs = cached_xhat.sample(i) + static_cast<std::size_t>(c) * plane;
        T* ys = y.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) ys[p] = g * hs[p] + b;
      }
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy) {
    const TensorT<T>& xhat = cached_xhat;
    const int plane = xhat.plane();
    TensorT<T> dyhat(dy.n, dy.c, dy.h, dy.w);
    for (int i = 0; i < dy.n; ++i) {
      for (int c = 0; c < dy.c; ++c) {
        const T g = gamma.data[c];
        const T* ds = dy.sample(i) + static_cast<std::size_t>(c) * plane;
        const T* hs = xhat.sample(i) + static_cast<std::size_t>(c) * plane;
        T dg = T(0), db = T(0);
        for (int p = 0; p < plane; ++p) {
          dg += ds[p] * hs[p];
          db += ds[p];
        }
        d_gamma.data[c] += dg;
        d_beta.data[c] += db;
        T* os = dyhat.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) os[p] = ds[p] * g;
      }
    }
    TensorT<T> dx(dy.n, dy.c, dy.h, dy.w);
    if (kind == NormKind::instance) {
      kernels::group_norm_backward(dy.n * dy.c, plane, xhat.data.data(), cached_istd.data(),
                                   dyhat.data.data(), dx.data.data());
    } else {
      batch_stats_backward(dyhat, dx);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, &d_gamma});
    out.push_back({prefix + ".beta", &beta, &d_beta});
  }

 private:
  void batch_stats_forward(const TensorT<T>& x) {
    const int plane = x.plane();
    const std::size_t count = static_cast<std::size_t>(x.n) * plane;
    cached_istd.assign(channels, T(0));
    for (int c = 0; c < channels; ++c) {
      T mu = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* xs = x.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) mu += xs[p];
      }
      mu /= T(count);
      T var = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* xs = x.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) {
          const T d = xs[p] - mu;
          var += d * d;
        }
      }
      var /= T(count);
      const T is = T(1) / std::sqrt(var + eps);
      cached_istd[c] = is;
      running_mean.data[c] = (T(1) - momentum) * running_mean.data[c] + momentum * mu;
      running_var.data[c] = (T(1) - momentum) * running_var.data[c] + momentum * var;
      for (int i = 0; i < x.n; ++i) {
        const T* xs = x.sample(i) + static_cast<std::size_t>(c) * plane;
        T* hs = cached_xhat.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) hs[p] = (xs[p] - mu) * is;
      }
    }
  }

  void batch_stats_backward(const TensorT<T>& dyhat, TensorT<T>& dx) {
    const TensorT<T>& xhat = cached_xhat;
    const int plane = xhat.plane();
    const std::size_t count = static_cast<std::size_t>(xhat.n) * plane;
    for (int c = 0; c < channels; ++c) {
      T sum_dy = T(0), sum_dyh = T(0);
      for (int i = 0; i < xhat.n; ++i) {
        const T* ds = dyhat.sample(i) + static_cast<std::size_t>(c) * plane;
        const T* hs = xhat.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) {
          sum_dy += ds[p];
          sum_dyh += ds[p] * hs[p];
        }
      }
      const T m_dy = sum_dy / T(count);
      const T m_dyh = sum_dyh / T(count);
      const T is = cached_istd[c];
      for (int i = 0; i < xhat.n; ++i) {
        const T* ds = dyhat.sample(i) + static_cast<std::size_t>(c) * plane;
        const T* hs = xhat.sample(i) + static_cast<std::size_t>(c) * plane;
        T* os = dx.sample(i) + static_cast<std::size_t>(c) * plane;
        for (int p = 0; p < plane; ++p) os[p] = is * (ds[p] - m_dy - hs[p] * m_dyh);
      }
    }
  }
};

template <typename T>
struct LeakyReLUT {
  T slope = T(0.2);
  TensorT<T> cached_input;

  TensorT<T> forward(const TensorT<T>& x) {
    cached_input = x;
    TensorT<T> y(x.n, x.c, x.h, x.w);
    kernels::leaky_relu(x.size(), slope, x.data.data(), y.data.data());
    return y;
  }
  TensorT<T> backward(const TensorT<T>& dy) {
    TensorT<T> dx(dy.n, dy.c, dy.h, dy.w);
    kernels::leaky_relu_grad(dy.size(), slope, cached_input.data.data(), dy.data.data(),
                             dx.data.data());
    return dx;
  }
};

// Squashes to [0,1]: (tanh + 1) / 2.
template <typename T>
struct Tanh01T {
  TensorT<T> cached_output;

  TensorT<T> forward(const TensorT<T>& x) {
    TensorT<T> y(x.n, x.c, x.h, x.w);
    kernels::tanh01(x.size(), x.data.data(), y.data.data());
    cached_output = y;
    return y;
  }
  TensorT<T> backward(const TensorT<T>& dy) {
    TensorT<T> dx(dy.n, dy.c, dy.h, dy.w);
    kernels::tanh01_grad(dy.size(), cached_output.data.data(), dy.data.data(), dx.data.data());
    return dx;
  }
};

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw BadInputError("concat_channels: spatial shape mismatch");
  TensorT<T> out(a.n, a.c + b.c, a.h, a.w);
  const std::size_t pa = a.sample_size(), pb = b.sample_size();
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + pa, out.sample(i));
    std::copy(b.sample(i), b.sample(i) + pb, out.sample(i) + pa);
  }
  return out;
}

template <typename T>
void split_channels(const TensorT<T>& d, int c_first, TensorT<T>& da, TensorT<T>& db) {
  da = TensorT<T>(d.n, c_first, d.h, d.w);
  db = TensorT<T>(d.n, d.c - c_first, d.h, d.w);
  for (int i = 0; i < d.n; ++i) {
    std::copy(d.sample(i), d.sample(i) + da.sample_size(), da.sample(i));
    std::copy(d.sample(i) + da.sample_size(), d.sample(i) + d.sample_size(), db.sample(i));
  }
}

}  // namespace parstain
