// Data-parallel compute kernels. Every kernel exists twice: a plain serial
// reference under kernels::serial and an OpenMP version under kernels::par.
// Each par kernel writes disjoint outputs per thread and keeps reduction
// order fixed at compile time (simd lanes, sequential k blocks), so its
// result does not depend on the thread count or schedule. Kernels without
// simd reductions match the serial reference bitwise; the rest match within
// rounding. Call sites use the unprefixed dispatchers, which select par.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace parstain::kernels {

struct ConvShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;

  int out_h() const { return (height + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (width + 2 * pad - kernel) / stride + 1; }
  int col_rows() const { return channels * kernel * kernel; }
  int col_cols() const { return out_h() * out_w(); }
};

namespace serial {

// C[M x N] (+)= A[M x K] * B[K x N], row-major.
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) ci[j] = T(0);
    }
    for (int l = 0; l < k; ++l) {
      const T av = a[static_cast<std::size_t>(i) * k + l];
      const T* bl = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C[M x K] (+)= A[M x N] * B[K x N]^T
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const T* bl = b + static_cast<std::size_t>(l) * n;
      T acc = T(0);
      for (int j = 0; j < n; ++j) acc += ai[j] * bl[j];
      T* dst = c + static_cast<std::size_t>(i) * k + l;
      *dst = accumulate ? *dst + acc : acc;
    }
  }
}

// C[K x N] (+)= A[M x K]^T * B[M x N]
template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  for (int l = 0; l < k; ++l) {
    T* cl = c + static_cast<std::size_t>(l) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) cl[j] = T(0);
    }
    for (int i = 0; i < m; ++i) {
      const T av = a[static_cast<std::size_t>(i) * k + l];
      const T* bi = b + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

// x[C x H x W] -> col[(C*k*k) x (OH*OW)], zero padding.
template <typename T>
void im2col(const ConvShape& s, const T* x, T* col) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  for (int r = 0; r < s.col_rows(); ++r) {
    const int c = r / (s.kernel * s.kernel);
    const int kh = (r / s.kernel) % s.kernel;
    const int kw = r % s.kernel;
    T* dst = col + static_cast<std::size_t>(r) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int y = oy * s.stride - s.pad + kh;
      for (int ox = 0; ox < ow; ++ox) {
        const int xx = ox * s.stride - s.pad + kw;
        const bool in = y >= 0 && y < s.height && xx >= 0 && xx < s.width;
        dst[static_cast<std::size_t>(oy) * ow + ox] =
            in ? x[c * plane + static_cast<std::size_t>(y) * s.width + xx] : T(0);
      }
    }
  }
}

// Adjoint of im2col: col[(C*k*k) x (OH*OW)] -> x[C x H x W], gather form.
template <typename T>
void col2im(const ConvShape& s, const T* col, T* x) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t cc = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      T* dst = x + (static_cast<std::size_t>(c) * s.height + y) * s.width;
      for (int xx = 0; xx < s.width; ++xx) {
        T acc = T(0);
        for (int kh = 0; kh < s.kernel; ++kh) {
          const int ty = y + s.pad - kh;
          if (ty < 0 || ty % s.stride != 0) continue;
          const int oy = ty / s.stride;
          if (oy >= oh) continue;
          for (int kw = 0; kw < s.kernel; ++kw) {
            const int tx = xx + s.pad - kw;
            if (tx < 0 || tx % s.stride != 0) continue;
            const int ox = tx / s.stride;
            if (ox >= ow) continue;
            const int r = (c * s.kernel + kh) * s.kernel + kw;
            acc += col[r * cc + static_cast<std::size_t>(oy) * ow + ox];
          }
        }
        dst[xx] = acc;
      }
    }
  }
}

template <typename T>
void add_bias(int channels, int plane, const T* bias, T* y) {
  for (int c = 0; c < channels; ++c) {
    T* yc = y + static_cast<std::size_t>(c) * plane;
    for (int i = 0; i < plane; ++i) yc[i] += bias[c];
  }
}

template <typename T>
void bias_grad(int channels, int plane, const T* dy, T* db) {
  for (int c = 0; c < channels; ++c) {
    const T* dc = dy + static_cast<std::size_t>(c) * plane;
    T acc = T(0);
    for (int i = 0; i < plane; ++i) acc += dc[i];
    db[c] += acc;
  }
}

template <typename T>
void leaky_relu(std::size_t n, T slope, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_grad(std::size_t n, T slope, const T* x, const T* dy, T* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] >= T(0) ? dy[i] : slope * dy[i];
}

// y = (tanh(x) + 1) / 2, squashing to [0,1].
template <typename T>
void tanh01(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = (std::tanh(x[i]) + T(1)) / T(2);
}

template <typename T>
void tanh01_grad(std::size_t n, const T* y, const T* dy, T* dx) {
  for (std::size_t i = 0; i < n; ++i) {
    const T t = T(2) * y[i] - T(1);
    dx[i] = dy[i] * (T(1) - t * t) / T(2);
  }
}

// Per-group normalization statistics over contiguous spans of length `span`.
// Instance norm: one group per (n,c) plane. Batch norm uses strided variants below.
template <typename T>
void group_norm_forward(int groups, int span, T eps, const T* x, T* y, T* mean, T* istd) {
  for (int g = 0; g < groups; ++g) {
    const T* xg = x + static_cast<std::size_t>(g) * span;
    T* yg = y + static_cast<std::size_t>(g) * span;
    T mu = T(0);
    for (int i = 0; i < span; ++i) mu += xg[i];
    mu /= T(span);
    T var = T(0);
    for (int i = 0; i < span; ++i) {
      const T d = xg[i] - mu;
      var += d * d;
    }
    var /= T(span);
    const T is = T(1) / std::sqrt(var + eps);
    mean[g] = mu;
    istd[g] = is;
    for (int i = 0; i < span; ++i) yg[i] = (xg[i] - mu) * is;
  }
}

template <typename T>
void group_norm_backward(int groups, int span, const T* xhat, const T* istd, const T* dy, T* dx) {
  for (int g = 0; g < groups; ++g) {
    const T* hg = xhat + static_cast<std::size_t>(g) * span;
    const T* dg = dy + static_cast<std::size_t>(g) * span;
    T* xg = dx + static_cast<std::size_t>(g) * span;
    T sum_dy = T(0), sum_dyh = T(0);
    for (int i = 0; i < span; ++i) {
      sum_dy += dg[i];
      sum_dyh += dg[i] * hg[i];
    }
    const T m_dy = sum_dy / T(span);
    const T m_dyh = sum_dyh / T(span);
    for (int i = 0; i < span; ++i) xg[i] = istd[g] * (dg[i] - m_dy - hg[i] * m_dyh);
  }
}

template <typename T>
void adam_step(std::size_t n, T lr, T beta1, T beta2, T eps, T bc1, T bc2,
               const T* g, T* m, T* v, T* p) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mh = m[i] / bc1;
    const T vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

// Bilinear resample of a planar image (C planes, H x W) onto out_h x out_w,
// mapping output pixel centers to input pixel centers (scale = in/out).
template <typename T>
void resample_bilinear(int channels, int in_h, int in_w, const T* in,
                       int out_h, int out_w, T* out) {
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (int c = 0; c < channels; ++c) {
    const T* src = in + static_cast<std::size_t>(c) * in_h * in_w;
    T* dst = out + static_cast<std::size_t>(c) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const double fy = (y + 0.5) * sy - 0.5;
      int y0 = static_cast<int>(std::floor(fy));
      const double wy = fy - y0;
      for (int x = 0; x < out_w; ++x) {
        const double fx = (x + 0.5) * sx - 0.5;
        int x0 = static_cast<int>(std::floor(fx));
        const double wx = fx - x0;
        const int y0c = y0 < 0 ? 0 : (y0 >= in_h ? in_h - 1 : y0);
        const int y1c = y0 + 1 < 0 ? 0 : (y0 + 1 >= in_h ? in_h - 1 : y0 + 1);
        const int x0c = x0 < 0 ? 0 : (x0 >= in_w ? in_w - 1 : x0);
        const int x1c = x0 + 1 < 0 ? 0 : (x0 + 1 >= in_w ? in_w - 1 : x0 + 1);
        const double v00 = src[static_cast<std::size_t>(y0c) * in_w + x0c];
        const double v01 = src[static_cast<std::size_t>(y0c) * in_w + x1c];
        const double v10 = src[static_cast<std::size_t>(y1c) * in_w + x0c];
        const double v11 = src[static_cast<std::size_t>(y1c) * in_w + x1c];
        const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
        dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<T>(v);
      }
    }
  }
}

// Separable filter with a symmetric tap vector, 'valid' region only:
// out is (H - n + 1) x (W - n + 1) for n taps.
template <typename T>
void sep_filter_valid(int h, int w, const T* in, int ntaps, const T* taps, T* tmp, T* out) {
  const int ow = w - ntaps + 1;
  const int oh = h - ntaps + 1;
  for (int y = 0; y < h; ++y) {
    const T* row = in + static_cast<std::size_t>(y) * w;
    T* trow = tmp + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) acc += taps[t] * row[x + t];
      trow[x] = acc;
    }
  }
  for (int y = 0; y < oh; ++y) {
    T* orow = out + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) acc += taps[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      orow[x] = acc;
    }
  }
}

// Separable blur with edge clamping, same-size output.
template <typename T>
void sep_blur_same(int h, int w, const T* in, int ntaps, const T* taps, T* tmp, T* out) {
  const int r = ntaps / 2;
  for (int y = 0; y < h; ++y) {
    const T* row = in + static_cast<std::size_t>(y) * w;
    T* trow = tmp + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) {
        int xx = x + t - r;
        xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
        acc += taps[t] * row[xx];
      }
      trow[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    T* orow = out + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) {
        int yy = y + t - r;
        yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
        acc += taps[t] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      orow[x] = acc;
    }
  }
}

}  // namespace serial

namespace par {

// Cache blocking over (j, k) so the B panel stays in L2 while every row of C
// in the block is updated. For each output element the k order is monotone,
// so the result is thread-count independent.
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  constexpr int jc = 4096;
  constexpr int kc = 64;
  if (!accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      T* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] = T(0);
    }
  }
  for (int j0 = 0; j0 < n; j0 += jc) {
    const int j1 = j0 + jc < n ? j0 + jc : n;
    for (int l0 = 0; l0 < k; l0 += kc) {
      const int l1 = l0 + kc < k ? l0 + kc : k;
#pragma omp parallel for schedule(static)
      for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<std::size_t>(i) * n;
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int l = l0; l < l1; ++l) {
          const T av = arow[l];
          const T* bl = b + static_cast<std::size_t>(l) * n;
#pragma omp simd
          for (int j = j0; j < j1; ++j) ci[j] += av * bl[j];
        }
      }
    }
  }
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  constexpr int jc = 4096;
  if (!accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      T* ci = c + static_cast<std::size_t>(i) * k;
      for (int l = 0; l < k; ++l) ci[l] = T(0);
    }
  }
  for (int j0 = 0; j0 < n; j0 += jc) {
    const int j1 = j0 + jc < n ? j0 + jc : n;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      const T* ai = a + static_cast<std::size_t>(i) * n;
      T* ci = c + static_cast<std::size_t>(i) * k;
      for (int l = 0; l < k; ++l) {
        const T* bl = b + static_cast<std::size_t>(l) * n;
        T acc = T(0);
#pragma omp simd reduction(+ : acc)
        for (int j = j0; j < j1; ++j) acc += ai[j] * bl[j];
        ci[l] += acc;
      }
    }
  }
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  constexpr int jc = 4096;
  constexpr int mc = 64;
  if (!accumulate) {
#pragma omp parallel for schedule(static)
    for (int l = 0; l < k; ++l) {
      T* cl = c + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) cl[j] = T(0);
    }
  }
  for (int j0 = 0; j0 < n; j0 += jc) {
    const int j1 = j0 + jc < n ? j0 + jc : n;
    for (int i0 = 0; i0 < m; i0 += mc) {
      const int i1 = i0 + mc < m ? i0 + mc : m;
#pragma omp parallel for schedule(static)
      for (int l = 0; l < k; ++l) {
        T* cl = c + static_cast<std::size_t>(l) * n;
        for (int i = i0; i < i1; ++i) {
          const T av = a[static_cast<std::size_t>(i) * k + l];
          const T* bi = b + static_cast<std::size_t>(i) * n;
#pragma omp simd
          for (int j = j0; j < j1; ++j) cl[j] += av * bi[j];
        }
      }
    }
  }
}

template <typename T>
void im2col(const ConvShape& s, const T* x, T* col) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  const int rows = s.col_rows();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int c = r / (s.kernel * s.kernel);
    const int kh = (r / s.kernel) % s.kernel;
    const int kw = r % s.kernel;
    T* dst = col + static_cast<std::size_t>(r) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int y = oy * s.stride - s.pad + kh;
      if (y < 0 || y >= s.height) {
        for (int ox = 0; ox < ow; ++ox) dst[static_cast<std::size_t>(oy) * ow + ox] = T(0);
        continue;
      }
      const T* srow = x + c * plane + static_cast<std::size_t>(y) * s.width;
      T* drow = dst + static_cast<std::size_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        const int xx = ox * s.stride - s.pad + kw;
        drow[ox] = (xx >= 0 && xx < s.width) ? srow[xx] : T(0);
      }
    }
  }
}

template <typename T>
void col2im(const ConvShape& s, const T* col, T* x) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t cc = static_cast<std::size_t>(oh) * ow;
  const int rows = s.channels * s.height;
#pragma omp parallel for schedule(static)
  for (int cy = 0; cy < rows; ++cy) {
    const int c = cy / s.height;
    const int y = cy % s.height;
    T* dst = x + (static_cast<std::size_t>(c) * s.height + y) * s.width;
    for (int xx = 0; xx < s.width; ++xx) {
      T acc = T(0);
      for (int kh = 0; kh < s.kernel; ++kh) {
        const int ty = y + s.pad - kh;
        if (ty < 0 || ty % s.stride != 0) continue;
        const int oy = ty / s.stride;
        if (oy >= oh) continue;
        for (int kw = 0; kw < s.kernel; ++kw) {
          const int tx = xx + s.pad - kw;
          if (tx < 0 || tx % s.stride != 0) continue;
          const int ox = tx / s.stride;
          if (ox >= ow) continue;
          const int r = (c * s.kernel + kh) * s.kernel + kw;
          acc += col[r * cc + static_cast<std::size_t>(oy) * ow + ox];
        }
      }
      dst[xx] = acc;
    }
  }
}

template <typename T>
void add_bias(int channels, int plane, const T* bias, T* y) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* yc = y + static_cast<std::size_t>(c) * plane;
    const T b = bias[c];
#pragma omp simd
    for (int i = 0; i < plane; ++i) yc[i] += b;
  }
}

template <typename T>
void bias_grad(int channels, int plane, const T* dy, T* db) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* dc = dy + static_cast<std::size_t>(c) * plane;
    T acc = T(0);
#pragma omp simd reduction(+ : acc)
    for (int i = 0; i < plane; ++i) acc += dc[i];
    db[c] += acc;
  }
}

template <typename T>
void leaky_relu(std::size_t n, T slope, const T* x, T* y) {
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_grad(std::size_t n, T slope, const T* x, const T* dy, T* dx) {
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) dx[i] = x[i] >= T(0) ? dy[i] : slope * dy[i];
}

template <typename T>
void tanh01(std::size_t n, const T* x, T* y) {
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) y[i] = (std::tanh(x[i]) + T(1)) / T(2);
}

template <typename T>
void tanh01_grad(std::size_t n, const T* y, const T* dy, T* dx) {
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    const T t = T(2) * y[i] - T(1);
    dx[i] = dy[i] * (T(1) - t * t) / T(2);
  }
}

template <typename T>
void group_norm_forward(int groups, int span, T eps, const T* x, T* y, T* mean, T* istd) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < groups; ++g) {
    const T* xg = x + static_cast<std::size_t>(g) * span;
    T* yg = y + static_cast<std::size_t>(g) * span;
    T mu = T(0);
#pragma omp simd reduction(+ : mu)
    for (int i = 0; i < span; ++i) mu += xg[i];
    mu /= T(span);
    T var = T(0);
#pragma omp simd reduction(+ : var)
    for (int i = 0; i < span; ++i) {
      const T d = xg[i] - mu;
      var += d * d;
    }
    var /= T(span);
    const T is = T(1) / std::sqrt(var + eps);
    mean[g] = mu;
    istd[g] = is;
#pragma omp simd
    for (int i = 0; i < span; ++i) yg[i] = (xg[i] - mu) * is;
  }
}

template <typename T>
void group_norm_backward(int groups, int span, const T* xhat, const T* istd, const T* dy, T* dx) {
#pragma omp parallel for schedule(static)
  for (int g = 0; g < groups; ++g) {
    const T* hg = xhat + static_cast<std::size_t>(g) * span;
    const T* dg = dy + static_cast<std::size_t>(g) * span;
    T* xg = dx + static_cast<std::size_t>(g) * span;
    T sum_dy = T(0), sum_dyh = T(0);
#pragma omp simd reduction(+ : sum_dy, sum_dyh)
    for (int i = 0; i < span; ++i) {
      sum_dy += dg[i];
      sum_dyh += dg[i] * hg[i];
    }
    const T m_dy = sum_dy / T(span);
    const T m_dyh = sum_dyh / T(span);
#pragma omp simd
    for (int i = 0; i < span; ++i) xg[i] = istd[g] * (dg[i] - m_dy - hg[i] * m_dyh);
  }
}

template <typename T>
void adam_step(std::size_t n, T lr, T beta1, T beta2, T eps, T bc1, T bc2,
               const T* g, T* m, T* v, T* p) {
  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mh = m[i] / bc1;
    const T vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

template <typename T>
void resample_bilinear(int channels, int in_h, int in_w, const T* in,
                       int out_h, int out_w, T* out) {
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
#pragma omp parallel for schedule(static) collapse(2)
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const T* src = in + static_cast<std::size_t>(c) * in_h * in_w;
      T* dst = out + static_cast<std::size_t>(c) * out_h * out_w;
      const double fy = (y + 0.5) * sy - 0.5;
      int y0 = static_cast<int>(std::floor(fy));
      const double wy = fy - y0;
      for (int x = 0; x < out_w; ++x) {
        const double fx = (x + 0.5) * sx - 0.5;
        int x0 = static_cast<int>(std::floor(fx));
        const double wx = fx - x0;
        const int y0c = y0 < 0 ? 0 : (y0 >= in_h ? in_h - 1 : y0);
        const int y1c = y0 + 1 < 0 ? 0 : (y0 + 1 >= in_h ? in_h - 1 : y0 + 1);
        const int x0c = x0 < 0 ? 0 : (x0 >= in_w ? in_w - 1 : x0);
        const int x1c = x0 + 1 < 0 ? 0 : (x0 + 1 >= in_w ? in_w - 1 : x0 + 1);
        const double v00 = src[static_cast<std::size_t>(y0c) * in_w + x0c];
        const double v01 = src[static_cast<std::size_t>(y0c) * in_w + x1c];
        const double v10 = src[static_cast<std::size_t>(y1c) * in_w + x0c];
        const double v11 = src[static_cast<std::size_t>(y1c) * in_w + x1c];
        const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
        dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<T>(v);
      }
    }
  }
}

template <typename T>
void sep_filter_valid(int h, int w, const T* in, int ntaps, const T* taps, T* tmp, T* out) {
  const int ow = w - ntaps + 1;
  const int oh = h - ntaps + 1;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const T* row = in + static_cast<std::size_t>(y) * w;
    T* trow = tmp + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) acc += taps[t] * row[x + t];
      trow[x] = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    T* orow = out + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) acc += taps[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      orow[x] = acc;
    }
  }
}

template <typename T>
void sep_blur_same(int h, int w, const T* in, int ntaps, const T* taps, T* tmp, T* out) {
  const int r = ntaps / 2;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const T* row = in + static_cast<std::size_t>(y) * w;
    T* trow = tmp + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) {
        int xx = x + t - r;
        xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
        acc += taps[t] * row[xx];
      }
      trow[x] = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    T* orow = out + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      T acc = T(0);
      for (int t = 0; t < ntaps; ++t) {
        int yy = y + t - r;
        yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
        acc += taps[t] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      orow[x] = acc;
    }
  }
}

}  // namespace par

// Dispatchers. The par kernels degrade to the serial order on one thread,
// so these are safe defaults everywhere.
using par::add_bias;
using par::adam_step;
using par::bias_grad;
using par::col2im;
using par::gemm_nn;
using par::gemm_nt;
using par::gemm_tn;
using par::group_norm_backward;
using par::group_norm_forward;
using par::im2col;
using par::leaky_relu;
using par::leaky_relu_grad;
using par::resample_bilinear;
using par::sep_blur_same;
using par::sep_filter_valid;
using par::tanh01;
using par::tanh01_grad;

inline std::vector<double> gaussian_taps(int ntaps, double sigma) {
  std::vector<double> t(ntaps);
  const double c = (ntaps - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < ntaps; ++i) {
    const double d = i - c;
    t[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += t[i];
  }
  for (auto& v : t) v /= sum;
  return t;
}

}  // namespace parstain::kernels
