#include "parstain/registration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "parstain/kernels.hpp"

namespace parstain {

namespace {

constexpr int kMinPoints = 12;

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_dense(int n, double* a, double* b) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-12) return false;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double acc = b[col];
    for (int c = col + 1; c < n; ++c) acc -= a[col * n + c] * b[c];
    b[col] = acc / a[col * n + col];
  }
  return true;
}

// Least squares via normal equations for a small basis.
bool least_squares(int nbasis, const std::vector<std::array<double, 5>>& phi,
                   const std::vector<double>& target, double* coeff) {
  double a[25] = {0};
  double b[5] = {0};
  for (std::size_t s = 0; s < phi.size(); ++s) {
    for (int i = 0; i < nbasis; ++i) {
      b[i] += phi[s][i] * target[s];
      for (int j = 0; j < nbasis; ++j) a[i * nbasis + j] += phi[s][i] * phi[s][j];
    }
  }
  if (!solve_dense(nbasis, a, b)) return false;
  for (int i = 0; i < nbasis; ++i) coeff[i] = b[i];
  return true;
}

inline void basis5(double u, double v, std::array<double, 5>& phi) {
  phi = {u, v, u * u, u * v, v * v};
}

float sample_rgb(const RGBImage& img, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double wx = x - x0, wy = y - y0;
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const int x0c = std::max(x0, 0), y0c = std::max(y0, 0);
  return static_cast<float>(
      (1 - wy) * ((1 - wx) * img.at(y0c, x0c, c) + wx * img.at(y0c, x1, c)) +
      wy * ((1 - wx) * img.at(y1, x0c, c) + wx * img.at(y1, x1, c)));
}

}  // namespace

void ControlPointSet::validate() const {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      const double dx = pairs[i].x_ref - pairs[j].x_ref;
      const double dy = pairs[i].y_ref - pairs[j].y_ref;
      if (dx * dx + dy * dy < 1e-18)
        throw BadInputError("control points: coincident reference points");
    }
  }
}

void save_control_points(const ControlPointSet& pts, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw BadInputError("cannot write control points: " + path);
  std::fprintf(f, "x_ref,y_ref,x_mov,y_mov\n");
  for (const auto& p : pts.pairs)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", p.x_ref, p.y_ref, p.x_mov, p.y_mov);
  std::fclose(f);
}

ControlPointSet load_control_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInputError("cannot read control points: " + path);
  ControlPointSet pts;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("x_ref") != std::string::npos) continue;  // header row
    }
    PointPair p;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &p.x_ref, &p.y_ref, &p.x_mov, &p.y_mov) != 4)
      throw BadInputError("malformed control point line in " + path);
    pts.pairs.push_back(p);
  }
  return pts;
}

RGBImage match_fov(const ChannelImage& reference, const RGBImage& moving) {
  if (!(reference.pitch_nm > 0) || !(moving.pitch_nm > 0))
    throw BadInputError("match_fov: both images need pixel pitch metadata");
  const double scale = moving.pitch_nm / reference.pitch_nm;
  if (std::abs(scale - 1.0) < 1e-12) return moving;
  const int out_h = std::max(1, static_cast<int>(std::lround(moving.height * scale)));
  const int out_w = std::max(1, static_cast<int>(std::lround(moving.width * scale)));

  // planar resample per color channel
  const std::size_t in_n = static_cast<std::size_t>(moving.height) * moving.width;
  const std::size_t out_n = static_cast<std::size_t>(out_h) * out_w;
  std::vector<float> src(in_n * 3), dst(out_n * 3);
  for (std::size_t i = 0; i < in_n; ++i)
    for (int c = 0; c < 3; ++c) src[c * in_n + i] = moving.pixels[i * 3 + c];
  kernels::resample_bilinear(3, moving.height, moving.width, src.data(), out_h, out_w, dst.data());
  RGBImage out(out_h, out_w, reference.pitch_nm);
  for (std::size_t i = 0; i < out_n; ++i)
    for (int c = 0; c < 3; ++c) out.pixels[i * 3 + c] = dst[c * out_n + i];
  return out;
}

NonRigidTransform fit_nonrigid(const ControlPointSet& points, int neighbors) {
  const std::size_t n = points.size();
  if (n < kMinPoints)
    throw BadInputError("fit_nonrigid: at least 12 control point pairs required");
  if (neighbors < 6) throw BadInputError("fit_nonrigid: neighbors must be >= 6");
  points.validate();

  // collinearity check on reference points
  {
    double mx = 0, my = 0;
    for (const auto& p : points.pairs) {
      mx += p.x_ref;
      my += p.y_ref;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : points.pairs) {
      const double dx = p.x_ref - mx, dy = p.y_ref - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    const double lmin = tr / 2 - disc;
    if (lmin < 1e-9 * std::max(1.0, tr))
      throw BadInputError("fit_nonrigid: reference points are collinear");
  }

  NonRigidTransform t;
  t.neighbors_ = neighbors;
  const int k_eff = static_cast<int>(std::min<std::size_t>(neighbors, n));

  for (std::size_t i = 0; i < n; ++i) {
    const PointPair& pi = points.pairs[i];
    // K nearest control points (the point itself included at distance 0)
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = points.pairs[j].x_ref - pi.x_ref;
      const double dy = points.pairs[j].y_ref - pi.y_ref;
      dist[j] = {dx * dx + dy * dy, j};
    }
    std::partial_sort(dist.begin(), dist.begin() + k_eff, dist.end());

    NonRigidTransform::LocalModel m;
    m.x_ref = pi.x_ref;
    m.y_ref = pi.y_ref;
    m.x_mov = pi.x_mov;
    m.y_mov = pi.y_mov;
    m.support = std::sqrt(dist[k_eff - 1].first);
    m.scale = std::max(m.support, 1e-9);

    // constrained fit: constant term pinned to the point's own
    // correspondence, remaining coefficients by least squares
    std::vector<std::array<double, 5>> phi(k_eff);
    std::vector<double> tx(k_eff), ty(k_eff);
    for (int s = 0; s < k_eff; ++s) {
      const PointPair& pj = points.pairs[dist[s].second];
      basis5((pj.x_ref - pi.x_ref) / m.scale, (pj.y_ref - pi.y_ref) / m.scale, phi[s]);
      tx[s] = pj.x_mov - pi.x_mov;
      ty[s] = pj.y_mov - pi.y_mov;
    }
    if (least_squares(5, phi, tx, m.cx) && least_squares(5, phi, ty, m.cy)) {
      m.degree = 2;
    } else {
      // degenerate neighborhood: fall back to a linear local model
      ++t.degree1_fallbacks_;
      m.degree = 1;
      std::fill(std::begin(m.cx), std::end(m.cx), 0.0);
      std::fill(std::begin(m.cy), std::end(m.cy), 0.0);
      if (!least_squares(2, phi, tx, m.cx) || !least_squares(2, phi, ty, m.cy)) {
        std::fill(std::begin(m.cx), std::end(m.cx), 0.0);
        std::fill(std::begin(m.cy), std::end(m.cy), 0.0);
      }
    }
    t.models_.push_back(m);
  }
  return t;
}

void NonRigidTransform::apply(double x_ref, double y_ref, double& x_mov, double& y_mov,
                              bool* extrapolated) const {
  if (extrapolated) *extrapolated = false;
  double wsum = 0, xacc = 0, yacc = 0;
  double nearest_d2 = std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const LocalModel& m = models_[i];
    const double dx = x_ref - m.x_ref, dy = y_ref - m.y_ref;
    const double d2 = dx * dx + dy * dy;
    if (d2 < nearest_d2) {
      nearest_d2 = d2;
      nearest = i;
    }
    const double d = std::sqrt(d2);
    if (d < 1e-9) {
      // singular weight: the transform interpolates its control points
      x_mov = m.x_mov;
      y_mov = m.y_mov;
      return;
    }
    if (d >= m.support) continue;
    const double w0 = (m.support - d) / (m.support * d);
    const double w = w0 * w0;
    const double u = dx / m.scale, v = dy / m.scale;
    std::array<double, 5> phi;
    basis5(u, v, phi);
    double px = m.x_mov, py = m.y_mov;
    for (int c = 0; c < 5; ++c) {
      px += m.cx[c] * phi[c];
      py += m.cy[c] * phi[c];
    }
    wsum += w;
    xacc += w * px;
    yacc += w * py;
  }
  if (wsum > 0) {
    x_mov = xacc / wsum;
    y_mov = yacc / wsum;
    return;
  }
  // outside every support: use the nearest local model alone
  if (extrapolated) *extrapolated = true;
  const LocalModel& m = models_[nearest];
  const double u = (x_ref - m.x_ref) / m.scale, v = (y_ref - m.y_ref) / m.scale;
  std::array<double, 5> phi;
  basis5(u, v, phi);
  x_mov = m.x_mov;
  y_mov = m.y_mov;
  for (int c = 0; c < 5; ++c) {
    x_mov += m.cx[c] * phi[c];
    y_mov += m.cy[c] * phi[c];
  }
}

RGBImage apply_transform(const NonRigidTransform& t, const RGBImage& moving, int out_height,
                         int out_width) {
  if (out_height < 1 || out_width < 1) throw BadInputError("apply_transform: bad output shape");
  RGBImage out(out_height, out_width, moving.pitch_nm);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      double sx, sy;
      t.apply(x, y, sx, sy);
      // half-pixel margin: edge-clamped sampling, not background fill
      if (sx < -0.5 || sx > moving.width - 0.5 || sy < -0.5 || sy > moving.height - 0.5) {
        // unmapped pixels default to the slide background
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = 1.0f;
      } else {
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_rgb(moving, sx, sy, c);
      }
    }
  }
  return out;
}

RegistrationReport registration_report(const NonRigidTransform& t,
                                       const ControlPointSet& holdout) {
  if (holdout.size() == 0) throw BadInputError("registration_report: empty holdout set");
  RegistrationReport rep;
  rep.n_points = holdout.size();
  rep.degree1_fallbacks = t.degree1_fallbacks();
  double sum = 0, mx = 0;
  for (const auto& p : holdout.pairs) {
    double tx, ty;
    t.apply(p.x_ref, p.y_ref, tx, ty);
    const double r = std::hypot(tx - p.x_mov, ty - p.y_mov);
    sum += r;
    mx = std::max(mx, r);
  }
  rep.mean_residual_px = sum / holdout.size();
  rep.max_residual_px = mx;
  return rep;
}

}  // namespace parstain
