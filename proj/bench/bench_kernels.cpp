// Timing comparison of the serial reference kernels against the OpenMP
// versions backing the hot paths (GEMM, im2col/col2im, resampling, blur).
// Run: bench_kernels [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "parstain/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace parstain;

namespace {

int g_reps = 5;

template <typename F>
double time_ms(F&& fn) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < g_reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / g_reps;
}

void report(const char* name, double serial_ms, double par_ms, double gflop) {
  std::printf("%-28s %9.2f ms %9.2f ms %6.2fx", name, serial_ms, par_ms, serial_ms / par_ms);
  if (gflop > 0) std::printf("  %6.1f GFLOP/s", gflop / (par_ms * 1e-3) / 1e9);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_reps = std::atoi(argv[1]);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);

#ifdef _OPENMP
  std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), g_reps);
#else
  std::printf("threads: 1 (OpenMP disabled), reps: %d\n", g_reps);
#endif
  std::printf("%-28s %12s %12s %7s\n", "kernel", "serial", "openmp", "speedup");

  {
    const int m = 128, n = 16384, k = 512;
    std::vector<float> a(static_cast<std::size_t>(m) * k), b(static_cast<std::size_t>(k) * n),
        c(static_cast<std::size_t>(m) * n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double fl = 2.0 * m * n * k;
    report("gemm_nn 128x16384x512",
           time_ms([&] { kernels::serial::gemm_nn(m, n, k, a.data(), b.data(), c.data(), false); }),
           time_ms([&] { kernels::par::gemm_nn(m, n, k, a.data(), b.data(), c.data(), false); }),
           fl);
    std::vector<float> an(static_cast<std::size_t>(m) * n), bn(static_cast<std::size_t>(k) * n),
        cn(static_cast<std::size_t>(m) * k);
    for (auto& v : an) v = u(rng);
    for (auto& v : bn) v = u(rng);
    report("gemm_nt 128x16384x512",
           time_ms([&] { kernels::serial::gemm_nt(m, n, k, an.data(), bn.data(), cn.data(), false); }),
           time_ms([&] { kernels::par::gemm_nt(m, n, k, an.data(), bn.data(), cn.data(), false); }),
           fl);
    report("gemm_tn 128x16384x512",
           time_ms([&] { kernels::serial::gemm_tn(m, n, k, a.data(), c.data(), b.data(), false); }),
           time_ms([&] { kernels::par::gemm_tn(m, n, k, a.data(), c.data(), b.data(), false); }),
           fl);
  }

  {
    kernels::ConvShape s{32, 256, 256, 4, 2, 1};
    std::vector<float> x(static_cast<std::size_t>(s.channels) * s.height * s.width);
    std::vector<float> col(static_cast<std::size_t>(s.col_rows()) * s.col_cols());
    for (auto& v : x) v = u(rng);
    report("im2col 32x256x256 k4s2",
           time_ms([&] { kernels::serial::im2col(s, x.data(), col.data()); }),
           time_ms([&] { kernels::par::im2col(s, x.data(), col.data()); }), 0);
    report("col2im 32x256x256 k4s2",
           time_ms([&] { kernels::serial::col2im(s, col.data(), x.data()); }),
           time_ms([&] { kernels::par::col2im(s, col.data(), x.data()); }), 0);
  }

  {
    const int c = 3, ih = 1024, iw = 1024, oh = 2048, ow = 2048;
    std::vector<float> in(static_cast<std::size_t>(c) * ih * iw),
        out(static_cast<std::size_t>(c) * oh * ow);
    for (auto& v : in) v = u(rng);
    report("resample 3x1024^2 -> 2x",
           time_ms([&] {
             kernels::serial::resample_bilinear(c, ih, iw, in.data(), oh, ow, out.data());
           }),
           time_ms([&] { kernels::par::resample_bilinear(c, ih, iw, in.data(), oh, ow, out.data()); }),
           0);
  }

  {
    const int h = 1024, w = 1024, taps = 19;
    const auto t = kernels::gaussian_taps(taps, 4.0);
    std::vector<float> tf(t.begin(), t.end());
    std::vector<float> in(static_cast<std::size_t>(h) * w), tmp(in.size()), out(in.size());
    for (auto& v : in) v = u(rng);
    report("gauss blur 1024^2 t19",
           time_ms([&] {
             kernels::serial::sep_blur_same(h, w, in.data(), taps, tf.data(), tmp.data(),
                                            out.data());
           }),
           time_ms([&] {
             kernels::par::sep_blur_same(h, w, in.data(), taps, tf.data(), tmp.data(), out.data());
           }),
           0);
  }

  {
    const int groups = 64, span = 4096;
    std::vector<float> x(static_cast<std::size_t>(groups) * span), y(x.size()), mean(groups),
        istd(groups);
    for (auto& v : x) v = u(rng);
    report("group_norm 64x4096",
           time_ms([&] {
             kernels::serial::group_norm_forward(groups, span, 1e-5f, x.data(), y.data(),
                                                 mean.data(), istd.data());
           }),
           time_ms([&] {
             kernels::par::group_norm_forward(groups, span, 1e-5f, x.data(), y.data(), mean.data(),
                                              istd.data());
           }),
           0);
  }

  return 0;
}
