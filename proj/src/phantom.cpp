#include "parstain/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "parstain/kernels.hpp"

namespace parstain {

namespace {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 on (seed ^ stream) to derive independent sub-streams
  std::uint64_t z = seed ^ (stream + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fixed per-pulse trace shape; peak absolute amplitude is exactly 1 so the
// compressed feature of value * shape is the value itself.
constexpr double kPulseShape[12] = {0.0,  0.62,  1.0,   0.74,  0.33,  -0.21,
                                    -0.45, -0.38, -0.20, -0.08, -0.01, 0.0};

struct Field {
  int h = 0, w = 0;
  std::vector<float> v;
  Field(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0f) {}
  float& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  float at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
  void stamp_max(int y, int x, float val) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    float& dst = at(y, x);
    if (val > dst) dst = val;
  }
};

void draw_nuclei(Field& mask, const PhantomSpec& spec, std::mt19937_64& rng) {
  const long n = std::lround(spec.nuclei_density * mask.h * mask.w / 1e4);
  std::uniform_real_distribution<double> ux(0.0, mask.w);
  std::uniform_real_distribution<double> uy(0.0, mask.h);
  std::uniform_real_distribution<double> uang(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> uq(0.65, 1.0);
  std::uniform_real_distribution<double> uint_(0.75, 1.0);
  std::normal_distribution<double> nr(spec.nucleus_radius_mean, spec.nucleus_radius_spread);
  for (long i = 0; i < n; ++i) {
    const double cx = ux(rng), cy = uy(rng);
    const double r = std::max(1.5, nr(rng));
    const double th = uang(rng);
    const double q = uq(rng);
    const double intensity = uint_(rng);
    // semi-axes keep pi*a*b == pi*r^2
    const double a = r / std::sqrt(q), b = r * std::sqrt(q);
    const double ct = std::cos(th), st = std::sin(th);
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - a - 2)));
    const int x1 = std::min(mask.w - 1, static_cast<int>(std::ceil(cx + a + 2)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - a - 2)));
    const int y1 = std::min(mask.h - 1, static_cast<int>(std::ceil(cy + a + 2)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * ct + dy * st) / a;
        const double v = (-dx * st + dy * ct) / b;
        const double rho = std::sqrt(u * u + v * v);
        // 1 inside, linear 1-px falloff crossing 0.5 at the ellipse boundary
        const double val = std::clamp((1.0 - rho) * r + 0.5, 0.0, 1.0) * intensity;
        if (val > 0) mask.stamp_max(y, x, static_cast<float>(val));
      }
    }
  }
}

void draw_fibers(Field& mask, const PhantomSpec& spec, std::mt19937_64& rng) {
  const long n = std::lround(spec.fiber_density * mask.h * mask.w / 1e4);
  const double dim = std::min(mask.h, mask.w);
  std::uniform_real_distribution<double> ux(0.0, mask.w);
  std::uniform_real_distribution<double> uy(0.0, mask.h);
  std::uniform_real_distribution<double> uang(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> ulen(0.25, 0.7);
  std::uniform_real_distribution<double> ubow(-0.2, 0.2);
  std::uniform_real_distribution<double> uth(1.5, 3.5);
  std::uniform_real_distribution<double> uint_(0.55, 0.95);
  for (long i = 0; i < n; ++i) {
    const double x0 = ux(rng), y0 = uy(rng);
    const double ang = uang(rng);
    const double len = ulen(rng) * dim;
    const double bow = ubow(rng) * len;
    const double thick = uth(rng);
    const double intensity = uint_(rng);
    const double x2 = x0 + len * std::cos(ang), y2 = y0 + len * std::sin(ang);
    // control point offset perpendicular to the chord
    const double mx = (x0 + x2) / 2 - bow * std::sin(ang);
    const double my = (y0 + y2) / 2 + bow * std::cos(ang);
    const int steps = std::max(2, static_cast<int>(len * 2));
    const int rad = static_cast<int>(std::ceil(thick + 1));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double omt = 1.0 - t;
      const double px = omt * omt * x0 + 2 * omt * t * mx + t * t * x2;
      const double py = omt * omt * y0 + 2 * omt * t * my + t * t * y2;
      const int ix = static_cast<int>(std::lround(px));
      const int iy = static_cast<int>(std::lround(py));
      for (int dy = -rad; dy <= rad; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          const double d = std::hypot(ix + dx - px, iy + dy - py);
          const double val = std::clamp(thick / 2 - d + 1.0, 0.0, 1.0) * intensity;
          if (val > 0) mask.stamp_max(iy + dy, ix + dx, static_cast<float>(val));
        }
      }
    }
  }
}

void draw_vessels(Field& mask, const PhantomSpec& spec, std::mt19937_64& rng) {
  const double dim = std::min(mask.h, mask.w);
  std::uniform_real_distribution<double> ux(0.0, mask.w);
  std::uniform_real_distribution<double> uy(0.0, mask.h);
  std::uniform_real_distribution<double> ur(0.02 * dim, 0.06 * dim);
  std::uniform_real_distribution<double> uth(2.0, 5.0);
  std::uniform_real_distribution<double> uint_(0.6, 0.95);
  for (int i = 0; i < spec.vessel_count; ++i) {
    const double cx = ux(rng), cy = uy(rng);
    const double radius = ur(rng);
    const double thick = uth(rng);
    const double intensity = uint_(rng);
    const int ext = static_cast<int>(std::ceil(radius + thick + 2));
    const int x0 = std::max(0, static_cast<int>(cx) - ext);
    const int x1 = std::min(mask.w - 1, static_cast<int>(cx) + ext);
    const int y0 = std::max(0, static_cast<int>(cy) - ext);
    const int y1 = std::min(mask.h - 1, static_cast<int>(cy) + ext);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = std::abs(std::hypot(x - cx, y - cy) - radius);
        const double val = std::clamp(thick / 2 - d + 1.0, 0.0, 1.0) * intensity;
        if (val > 0) mask.stamp_max(y, x, static_cast<float>(val));
      }
    }
  }
}

// Low-frequency texture from a few random cosine waves, range [0,1].
Field value_noise(int h, int w, std::mt19937_64& rng) {
  Field f(h, w);
  std::uniform_real_distribution<double> uang(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> ufreq(1.5, 5.0);
  const double dim = std::min(h, w);
  struct Wave {
    double kx, ky, phase;
  };
  std::vector<Wave> waves(4);
  for (auto& wv : waves) {
    const double ang = uang(rng);
    const double freq = ufreq(rng) * 2 * std::numbers::pi / dim;
    wv = {freq * std::cos(ang), freq * std::sin(ang), uang(rng)};
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0;
      for (const auto& wv : waves) v += std::cos(wv.kx * x + wv.ky * y + wv.phase);
      f.at(y, x) = static_cast<float>(0.5 + v / 8.0);
    }
  }
  return f;
}

float sample_bilinear(const ChannelImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double wx = x - x0, wy = y - y0;
  auto clampx = [&](int v) { return v < 0 ? 0 : (v >= img.width ? img.width - 1 : v); };
  auto clampy = [&](int v) { return v < 0 ? 0 : (v >= img.height ? img.height - 1 : v); };
  const double v00 = img.at(clampy(y0), clampx(x0));
  const double v01 = img.at(clampy(y0), clampx(x0 + 1));
  const double v10 = img.at(clampy(y0 + 1), clampx(x0));
  const double v11 = img.at(clampy(y0 + 1), clampx(x0 + 1));
  return static_cast<float>((1 - wy) * ((1 - wx) * v00 + wx * v01) +
                            wy * ((1 - wx) * v10 + wx * v11));
}

}  // namespace

void PhantomSpec::validate() const {
  if (height < 64 || width < 64) throw BadInputError("phantom dimensions must be >= 64");
  if (nuclei_density < 0 || fiber_density < 0 || vessel_count < 0 || noise_sigma < 0 ||
      nucleus_radius_spread < 0)
    throw BadInputError("phantom densities and counts must be >= 0");
  if (!(pitch_nm > 0)) throw BadInputError("phantom pitch must be > 0");
  if (nucleus_radius_mean <= 0) throw BadInputError("nucleus radius must be > 0");
}

void GridSpec::validate() const {
  if (height < 1 || width < 1) throw BadInputError("grid dimensions must be >= 1");
  if (!(pitch_nm > 0)) throw BadInputError("grid pitch must be > 0");
}

std::pair<MultiChannelImage, RGBImage> generate_phantom(const PhantomSpec& spec,
                                                        std::uint64_t seed,
                                                        const HePalette& palette) {
  spec.validate();
  const int h = spec.height, w = spec.width;

  std::mt19937_64 rng(mix_seed(seed, 1));
  Field nuclei(h, w), stroma(h, w);
  draw_nuclei(nuclei, spec, rng);
  draw_fibers(stroma, spec, rng);
  draw_vessels(stroma, spec, rng);
  Field texture = value_noise(h, w, rng);

  // morphology envelope: blurred union of the structures plus slow texture
  Field envelope(h, w);
  {
    std::vector<float> unioned(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < unioned.size(); ++i)
      unioned[i] = std::max(nuclei.v[i], stroma.v[i]);
    const auto taps_d = kernels::gaussian_taps(19, 4.0);
    std::vector<float> taps(taps_d.begin(), taps_d.end());
    std::vector<float> tmp(unioned.size());
    kernels::sep_blur_same(h, w, unioned.data(), 19, taps.data(), tmp.data(), envelope.v.data());
    for (std::size_t i = 0; i < unioned.size(); ++i) {
      const float cover = std::max(envelope.v[i], 0.6f * unioned[i]);
      envelope.v[i] = std::clamp(0.85f * cover + 0.18f * texture.v[i] + 0.05f, 0.0f, 1.0f);
    }
  }

  MultiChannelImage channels;
  channels.non_radiative = ChannelImage(h, w, spec.pitch_nm);
  channels.radiative = ChannelImage(h, w, spec.pitch_nm);
  channels.scattering = ChannelImage(h, w, spec.pitch_nm);
  RGBImage he(h, w, spec.pitch_nm);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double n = nuclei.v[i];
      // extranuclear contrast is suppressed inside nuclei so the two
      // absorption channels stay spatially complementary
      const double s = stroma.v[i] * (1.0 - 0.9 * n);
      channels.non_radiative.pixels[i] = static_cast<float>(n);
      channels.radiative.pixels[i] = static_cast<float>(s);
      channels.scattering.pixels[i] = envelope.v[i];
      const double hc = palette.hematoxylin_strength * n;
      const double ec = palette.eosin_strength *
                        (palette.stroma_eosin * s + palette.envelope_eosin * envelope.v[i]);
      for (int c = 0; c < 3; ++c) {
        he.at(y, x, c) = static_cast<float>(
            std::exp(-(palette.hematoxylin_od[c] * hc + palette.eosin_od[c] * ec)));
      }
    }
  }

  if (spec.noise_sigma > 0) {
    const double sig = spec.noise_sigma;
    const double cap = 3.0 * sig;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      std::mt19937_64 row_rng(mix_seed(seed, 0x1000 + static_cast<std::uint64_t>(y)));
      std::normal_distribution<double> noise(0.0, sig);
      for (int x = 0; x < w; ++x) {
        auto jitter = [&](float v) {
          const double e = std::clamp(noise(row_rng), -cap, cap);
          return static_cast<float>(std::clamp(v + e, 0.0, 1.0));
        };
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        channels.non_radiative.pixels[i] = jitter(channels.non_radiative.pixels[i]);
        channels.radiative.pixels[i] = jitter(channels.radiative.pixels[i]);
        channels.scattering.pixels[i] = jitter(channels.scattering.pixels[i]);
        for (int c = 0; c < 3; ++c) he.at(y, x, c) = jitter(he.at(y, x, c));
      }
    }
  }
  return {std::move(channels), std::move(he)};
}

std::vector<ScanRecord> simulate_scan(const MultiChannelImage& truth, const GridSpec& grid,
                                      double jitter_nm, std::uint64_t seed) {
  grid.validate();
  if (jitter_nm < 0) throw BadInputError("jitter must be >= 0");
  const double ext_x = (truth.width() - 1) * truth.pitch_nm();
  const double ext_y = (truth.height() - 1) * truth.pitch_nm();
  const double last_x = grid.origin_x_nm + (grid.width - 1) * grid.pitch_nm;
  const double last_y = grid.origin_y_nm + (grid.height - 1) * grid.pitch_nm;
  if (grid.origin_x_nm < 0 || grid.origin_y_nm < 0 || last_x > ext_x + 1e-6 || last_y > ext_y + 1e-6)
    throw BadInputError("grid extends beyond truth extent");

  std::vector<ScanRecord> records(static_cast<std::size_t>(grid.height) * grid.width);
#pragma omp parallel for schedule(static)
  for (int row = 0; row < grid.height; ++row) {
    std::mt19937_64 rng(mix_seed(seed, 0x2000 + static_cast<std::uint64_t>(row)));
    std::uniform_real_distribution<double> uj(-jitter_nm, jitter_nm);
    for (int col = 0; col < grid.width; ++col) {
      ScanRecord& r = records[static_cast<std::size_t>(row) * grid.width + col];
      r.pulse_index = static_cast<std::int64_t>(row) * grid.width + col;
      double x = grid.origin_x_nm + col * grid.pitch_nm;
      double y = grid.origin_y_nm + row * grid.pitch_nm;
      if (jitter_nm > 0) {
        x = std::clamp(x + uj(rng), 0.0, ext_x);
        y = std::clamp(y + uj(rng), 0.0, ext_y);
      }
      r.stage_x_nm = x;
      r.stage_y_nm = y;
      const double px = x / truth.pitch_nm();
      const double py = y / truth.pitch_nm();
      double trace[12];
      float* feats[3] = {&r.f_nr, &r.f_rad, &r.f_sc};
      for (int c = 0; c < 3; ++c) {
        const double v = sample_bilinear(truth.channel(c), px, py);
        for (int t = 0; t < 12; ++t) trace[t] = v * kPulseShape[t];
        *feats[c] = static_cast<float>(compress_event(trace));
      }
    }
  }
  return records;
}

double compress_event(std::span<const double> trace) {
  if (trace.empty()) throw BadInputError("compress_event: empty trace");
  double m = 0.0;
  for (const double v : trace) m = std::max(m, std::abs(v));
  return std::clamp(m, 0.0, 1.0);
}

MultiChannelImage reconstruct_grid(const std::vector<ScanRecord>& records, const GridSpec& grid) {
  grid.validate();
  if (records.empty()) throw BadInputError("reconstruct_grid: no records");
  const int h = grid.height, w = grid.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  // nearest record within one pitch of each node; ties break on pulse_index
  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> best(n, -1);
  const double pitch = grid.pitch_nm;
  for (std::size_t ri = 0; ri < records.size(); ++ri) {
    const ScanRecord& r = records[ri];
    const double gx = (r.stage_x_nm - grid.origin_x_nm) / pitch;
    const double gy = (r.stage_y_nm - grid.origin_y_nm) / pitch;
    const int cx = static_cast<int>(std::lround(gx));
    const int cy = static_cast<int>(std::lround(gy));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = cx + dx, ny = cy + dy;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        const double ddx = (gx - nx) * pitch, ddy = (gy - ny) * pitch;
        const double d2 = ddx * ddx + ddy * ddy;
        if (d2 >= pitch * pitch) continue;  // strictly within one pitch
        const std::size_t node = static_cast<std::size_t>(ny) * w + nx;
        if (d2 < best_d2[node] ||
            (d2 == best_d2[node] && best[node] >= 0 &&
             r.pulse_index < records[best[node]].pulse_index)) {
          best_d2[node] = d2;
          best[node] = static_cast<std::int64_t>(ri);
        }
      }
    }
  }

  MultiChannelImage out;
  out.non_radiative = ChannelImage(h, w, pitch);
  out.radiative = ChannelImage(h, w, pitch);
  out.scattering = ChannelImage(h, w, pitch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t node = static_cast<std::size_t>(y) * w + x;
      if (best[node] < 0) continue;
      const ScanRecord& r = records[static_cast<std::size_t>(best[node])];
      out.non_radiative.pixels[node] = r.f_nr;
      out.radiative.pixels[node] = r.f_rad;
      out.scattering.pixels[node] = r.f_sc;
    }
  }

  // gap fill: mean of assigned 4-neighbors, 0 if isolated
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t node = static_cast<std::size_t>(y) * w + x;
      if (best[node] >= 0) continue;
      double sum[3] = {0, 0, 0};
      int cnt = 0;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
        const std::size_t nb = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (best[nb] < 0) continue;
        const ScanRecord& r = records[static_cast<std::size_t>(best[nb])];
        sum[0] += r.f_nr;
        sum[1] += r.f_rad;
        sum[2] += r.f_sc;
        ++cnt;
      }
      if (cnt > 0) {
        out.non_radiative.pixels[node] = static_cast<float>(sum[0] / cnt);
        out.radiative.pixels[node] = static_cast<float>(sum[1] / cnt);
        out.scattering.pixels[node] = static_cast<float>(sum[2] / cnt);
      }
    }
  }
  return out;
}

void save_scan_records(const std::vector<ScanRecord>& records, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw BadInputError("cannot write scan records: " + path);
  std::fprintf(f, "# pulse_index x_nm y_nm f_nr f_rad f_sc\n");
  for (const auto& r : records) {
    std::fprintf(f, "%lld %.3f %.3f %.9g %.9g %.9g\n", static_cast<long long>(r.pulse_index),
                 r.stage_x_nm, r.stage_y_nm, r.f_nr, r.f_rad, r.f_sc);
  }
  std::fclose(f);
}

std::vector<ScanRecord> load_scan_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInputError("cannot read scan records: " + path);
  std::vector<ScanRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ScanRecord r;
    long long idx = 0;
    float nr = 0, rad = 0, sc = 0;
    if (std::sscanf(line.c_str(), "%lld %lf %lf %f %f %f", &idx, &r.stage_x_nm, &r.stage_y_nm,
                    &nr, &rad, &sc) != 6)
      throw BadInputError("malformed scan record line in " + path);
    r.pulse_index = idx;
    r.f_nr = nr;
    r.f_rad = rad;
    r.f_sc = sc;
    records.push_back(r);
  }
  return records;
}

void WarpField::displacement(double x, double y, double& dx, double& dy) const {
  double ax = 0, ay = 0;
  for (const auto& b : bumps) {
    const double ddx = x - b.cx, ddy = y - b.cy;
    const double g = std::exp(-(ddx * ddx + ddy * ddy) / (2 * b.sigma * b.sigma));
    ax += b.ax * g;
    ay += b.ay * g;
  }
  dx = ax * scale;
  dy = ay * scale;
}

WarpField make_warp_field(int height, int width, double amplitude_px, std::uint64_t seed) {
  if (amplitude_px < 0) throw BadInputError("warp amplitude must be >= 0");
  WarpField field;
  if (amplitude_px == 0) return field;
  std::mt19937_64 rng(mix_seed(seed, 3));
  std::uniform_int_distribution<int> unb(3, 6);
  std::uniform_real_distribution<double> ux(0.1 * width, 0.9 * width);
  std::uniform_real_distribution<double> uy(0.1 * height, 0.9 * height);
  std::uniform_real_distribution<double> us(0.18, 0.30);
  std::uniform_real_distribution<double> ua(0.4, 1.0);
  std::uniform_real_distribution<double> uang(0.0, 2 * std::numbers::pi);
  const double dim = std::min(height, width);
  const int nb = unb(rng);
  for (int i = 0; i < nb; ++i) {
    WarpField::Bump b;
    b.cx = ux(rng);
    b.cy = uy(rng);
    b.sigma = us(rng) * dim;
    const double mag = ua(rng);
    const double ang = uang(rng);
    b.ax = mag * std::cos(ang);
    b.ay = mag * std::sin(ang);
    field.bumps.push_back(b);
  }
  // rescale so the max displacement magnitude over a dense grid equals the
  // requested amplitude
  double max_mag = 0;
  for (int y = 0; y < height; y += 2) {
    for (int x = 0; x < width; x += 2) {
      double dx, dy;
      field.displacement(x, y, dx, dy);
      max_mag = std::max(max_mag, std::hypot(dx, dy));
    }
  }
  if (max_mag > 0) field.scale = amplitude_px / max_mag;
  return field;
}

WarpPairResult warp_pair(const RGBImage& he, double warp_amplitude_px, std::uint64_t seed,
                         int n_points) {
  if (n_points < 12) throw BadInputError("warp_pair: need at least 12 control points");
  WarpPairResult res;
  res.field = make_warp_field(he.height, he.width, warp_amplitude_px, seed);

  res.warped = RGBImage(he.height, he.width, he.pitch_nm);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < he.height; ++y) {
    for (int x = 0; x < he.width; ++x) {
      double dx, dy;
      res.field.displacement(x, y, dx, dy);
      const double sx = x + dx, sy = y + dy;
      for (int c = 0; c < 3; ++c) {
        if (sx < 0 || sx > he.width - 1 || sy < 0 || sy > he.height - 1) {
          res.warped.at(y, x, c) = 1.0f;  // white background
        } else {
          const int x0 = static_cast<int>(std::floor(sx));
          const int y0 = static_cast<int>(std::floor(sy));
          const double wx = sx - x0, wy = sy - y0;
          const int x1 = std::min(x0 + 1, he.width - 1);
          const int y1 = std::min(y0 + 1, he.height - 1);
          const double v = (1 - wy) * ((1 - wx) * he.at(y0, x0, c) + wx * he.at(y0, x1, c)) +
                           wy * ((1 - wx) * he.at(y1, x0, c) + wx * he.at(y1, x1, c));
          res.warped.at(y, x, c) = static_cast<float>(v);
        }
      }
    }
  }

  // exact correspondences: moving-frame sample q maps to reference point
  // q + d(q), since warped(q) = he(q + d(q))
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_points))));
  int cols = (n_points + rows - 1) / rows;
  while (rows * cols < n_points) ++cols;
  const double mx = 0.12 * he.width, my = 0.12 * he.height;
  int made = 0;
  for (int r = 0; r < rows && made < n_points; ++r) {
    for (int c = 0; c < cols && made < n_points; ++c, ++made) {
      const double qx = cols == 1 ? he.width / 2.0 : mx + (he.width - 2 * mx) * c / (cols - 1);
      const double qy = rows == 1 ? he.height / 2.0 : my + (he.height - 2 * my) * r / (rows - 1);
      double dx, dy;
      res.field.displacement(qx, qy, dx, dy);
      res.points.pairs.push_back({qx + dx, qy + dy, qx, qy});
    }
  }
  return res;
}

}  // namespace parstain
