#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "parstain/kernels.hpp"

using namespace parstain;

namespace {

std::vector<float> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> random_vecd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// plain triple loop, no blocking, double accumulation
void gemm_oracle(int m, int n, int k, const float* a, const float* b, float* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int l = 0; l < k; ++l)
        acc += static_cast<double>(a[static_cast<std::size_t>(i) * k + l]) *
               b[static_cast<std::size_t>(l) * n + j];
      c[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  }
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace

TEST_CASE("gemm_nn matches naive oracle and serial reference") {
  std::mt19937_64 rng(1);
  for (const auto& [m, n, k] : {std::tuple{7, 33, 5}, {16, 100, 48}, {65, 257, 129}}) {
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<float> c_par(static_cast<std::size_t>(m) * n), c_ser(c_par.size()),
        c_ref(c_par.size());
    kernels::par::gemm_nn(m, n, k, a.data(), b.data(), c_par.data(), false);
    kernels::serial::gemm_nn(m, n, k, a.data(), b.data(), c_ser.data(), false);
    gemm_oracle(m, n, k, a.data(), b.data(), c_ref.data());
    CHECK(max_abs_diff(c_par, c_ref) < 1e-4);
    CHECK(max_abs_diff(c_ser, c_ref) < 1e-4);
    CHECK(max_abs_diff(c_par, c_ser) < 1e-5);
  }
}

TEST_CASE("gemm_nn accumulate adds onto existing values") {
  std::mt19937_64 rng(2);
  const int m = 9, n = 31, k = 17;
  const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
  const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
  std::vector<float> c0(static_cast<std::size_t>(m) * n, 0.5f), c1(c0);
  kernels::par::gemm_nn(m, n, k, a.data(), b.data(), c0.data(), true);
  kernels::serial::gemm_nn(m, n, k, a.data(), b.data(), c1.data(), true);
  CHECK(max_abs_diff(c0, c1) < 1e-5);
}

TEST_CASE("gemm_nt and gemm_tn match transposed oracles") {
  std::mt19937_64 rng(3);
  const int m = 13, n = 77, k = 21;
  const auto a = random_vec(static_cast<std::size_t>(m) * n, rng);  // A[m x n]
  const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);  // B[k x n]
  std::vector<float> c(static_cast<std::size_t>(m) * k), c_ser(c.size()), c_ref(c.size());
  kernels::par::gemm_nt(m, n, k, a.data(), b.data(), c.data(), false);
  kernels::serial::gemm_nt(m, n, k, a.data(), b.data(), c_ser.data(), false);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      double acc = 0;
      for (int j = 0; j < n; ++j)
        acc += static_cast<double>(a[static_cast<std::size_t>(i) * n + j]) *
               b[static_cast<std::size_t>(l) * n + j];
      c_ref[static_cast<std::size_t>(i) * k + l] = static_cast<float>(acc);
    }
  CHECK(max_abs_diff(c, c_ref) < 1e-4);
  CHECK(max_abs_diff(c_ser, c_ref) < 1e-4);

  const auto a2 = random_vec(static_cast<std::size_t>(m) * k, rng);  // A[m x k]
  const auto b2 = random_vec(static_cast<std::size_t>(m) * n, rng);  // B[m x n]
  std::vector<float> d(static_cast<std::size_t>(k) * n), d_ser(d.size()), d_ref(d.size());
  kernels::par::gemm_tn(m, n, k, a2.data(), b2.data(), d.data(), false);
  kernels::serial::gemm_tn(m, n, k, a2.data(), b2.data(), d_ser.data(), false);
  for (int l = 0; l < k; ++l)
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int i = 0; i < m; ++i)
        acc += static_cast<double>(a2[static_cast<std::size_t>(i) * k + l]) *
               b2[static_cast<std::size_t>(i) * n + j];
      d_ref[static_cast<std::size_t>(l) * n + j] = static_cast<float>(acc);
    }
  CHECK(max_abs_diff(d, d_ref) < 1e-4);
  CHECK(max_abs_diff(d_ser, d_ref) < 1e-4);
}

TEST_CASE("im2col matches serial and col2im is its exact adjoint") {
  std::mt19937_64 rng(4);
  for (const auto& [c, h, w, k, s, p] :
       {std::tuple{3, 16, 16, 4, 2, 1}, {2, 15, 13, 4, 1, 1}, {4, 9, 9, 3, 2, 0}}) {
    kernels::ConvShape shape{c, h, w, k, s, p};
    const std::size_t xn = static_cast<std::size_t>(c) * h * w;
    const std::size_t cn = static_cast<std::size_t>(shape.col_rows()) * shape.col_cols();
    const auto x = random_vecd(xn, rng);
    std::vector<double> col_par(cn), col_ser(cn);
    kernels::par::im2col(shape, x.data(), col_par.data());
    kernels::serial::im2col(shape, x.data(), col_ser.data());
    CHECK(col_par == col_ser);

    // adjoint identity: <col2im(c), x> == <c, im2col(x)>
    const auto cvec = random_vecd(cn, rng);
    std::vector<double> back(xn);
    kernels::par::col2im(shape, cvec.data(), back.data());
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < xn; ++i) lhs += back[i] * x[i];
    for (std::size_t i = 0; i < cn; ++i) rhs += cvec[i] * col_par[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    std::vector<double> back_ser(xn);
    kernels::serial::col2im(shape, cvec.data(), back_ser.data());
    CHECK(back == back_ser);
  }
}

TEST_CASE("elementwise kernels match their serial references") {
  std::mt19937_64 rng(5);
  const std::size_t n = 1000;
  const auto x = random_vec(n, rng);
  std::vector<float> a(n), b(n);

  kernels::par::leaky_relu(n, 0.2f, x.data(), a.data());
  kernels::serial::leaky_relu(n, 0.2f, x.data(), b.data());
  CHECK(a == b);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(a[i] == (x[i] >= 0 ? x[i] : doctest::Approx(0.2f * x[i])));

  kernels::par::tanh01(n, x.data(), a.data());
  kernels::serial::tanh01(n, x.data(), b.data());
  CHECK(a == b);
  for (const float v : a) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("group norm forward/backward match serial and normalize correctly") {
  std::mt19937_64 rng(6);
  const int groups = 6, span = 301;
  const auto x = random_vec(static_cast<std::size_t>(groups) * span, rng);
  std::vector<float> y_par(x.size()), y_ser(x.size()), mean(groups), istd(groups),
      mean2(groups), istd2(groups);
  kernels::par::group_norm_forward(groups, span, 1e-5f, x.data(), y_par.data(), mean.data(),
                                   istd.data());
  kernels::serial::group_norm_forward(groups, span, 1e-5f, x.data(), y_ser.data(), mean2.data(),
                                      istd2.data());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y_par[i] == doctest::Approx(y_ser[i]).epsilon(1e-4));
  for (int g = 0; g < groups; ++g) {
    double m = 0, v = 0;
    for (int i = 0; i < span; ++i) m += y_par[static_cast<std::size_t>(g) * span + i];
    m /= span;
    for (int i = 0; i < span; ++i) {
      const double d = y_par[static_cast<std::size_t>(g) * span + i] - m;
      v += d * d;
    }
    v /= span;
    CHECK(m == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
  }

  const auto dy = random_vec(x.size(), rng);
  std::vector<float> dx_par(x.size()), dx_ser(x.size());
  kernels::par::group_norm_backward(groups, span, y_par.data(), istd.data(), dy.data(),
                                    dx_par.data());
  kernels::serial::group_norm_backward(groups, span, y_ser.data(), istd2.data(), dy.data(),
                                       dx_ser.data());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(dx_par[i] == doctest::Approx(dx_ser[i]).epsilon(1e-4));
}

TEST_CASE("bilinear resample: identity, exact 2x of linear ramps, serial parity") {
  std::mt19937_64 rng(7);
  const int h = 33, w = 47;
  const auto x = random_vec(static_cast<std::size_t>(h) * w, rng);
  std::vector<float> same(x.size());
  kernels::par::resample_bilinear(1, h, w, x.data(), h, w, same.data());
  CHECK(x == same);

  std::vector<float> big(static_cast<std::size_t>(2 * h) * 2 * w), big_ser(big.size());
  kernels::par::resample_bilinear(1, h, w, x.data(), 2 * h, 2 * w, big.data());
  kernels::serial::resample_bilinear(1, h, w, x.data(), 2 * h, 2 * w, big_ser.data());
  CHECK(big == big_ser);
}

TEST_CASE("separable valid filter matches direct 2-D windowed sum") {
  std::mt19937_64 rng(8);
  const int h = 20, w = 24, n = 11;
  const auto taps = kernels::gaussian_taps(n, 1.5);
  const auto x = random_vecd(static_cast<std::size_t>(h) * w, rng);
  std::vector<double> tmp(static_cast<std::size_t>(h) * (w - n + 1));
  std::vector<double> out(static_cast<std::size_t>(h - n + 1) * (w - n + 1));
  kernels::par::sep_filter_valid(h, w, x.data(), n, taps.data(), tmp.data(), out.data());
  for (int y = 0; y < h - n + 1; ++y) {
    for (int xx = 0; xx < w - n + 1; ++xx) {
      double acc = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          acc += taps[i] * taps[j] * x[static_cast<std::size_t>(y + i) * w + xx + j];
      CHECK(out[static_cast<std::size_t>(y) * (w - n + 1) + xx] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam step matches the update rule") {
  const std::size_t n = 4;
  std::vector<float> g{0.1f, -0.2f, 0.3f, 0.0f}, m(n, 0.0f), v(n, 0.0f), p(n, 1.0f);
  const float lr = 0.1f, b1 = 0.5f, b2 = 0.9f, eps = 1e-8f;
  kernels::par::adam_step(n, lr, b1, b2, eps, 1 - b1, 1 - b2, g.data(), m.data(), v.data(),
                          p.data());
  for (std::size_t i = 0; i < n; ++i) {
    const double mh = 0.5 * g[i] / (1 - 0.5);
    const double vh = 0.1 * g[i] * g[i] / (1 - 0.9);
    const double expect = 1.0 - lr * mh / (std::sqrt(vh) + eps);
    CHECK(p[i] == doctest::Approx(expect).epsilon(1e-5));
  }
}
