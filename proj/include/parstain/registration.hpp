// Control-point driven co-registration: coarse pixel-pitch matching, a local
// weighted mean transform built from per-point quadratic fits, inverse-mapped
// resampling, and residual reporting.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parstain/image.hpp"

namespace parstain {

struct PointPair {
  double x_ref = 0, y_ref = 0;
  double x_mov = 0, y_mov = 0;
};

struct ControlPointSet {
  std::vector<PointPair> pairs;

  std::size_t size() const { return pairs.size(); }
  void validate() const;  // no coincident reference points
};

void save_control_points(const ControlPointSet& pts, const std::string& path);
ControlPointSet load_control_points(const std::string& path);

// Local weighted mean transform. Each control point carries a degree-2
// polynomial fitted over its K nearest control points, constrained to pass
// through its own correspondence; evaluation blends the local polynomials
// with compact radial weights that are singular at the control points, which
// makes the transform interpolate them exactly.
class NonRigidTransform {
 public:
  struct LocalModel {
    double x_ref = 0, y_ref = 0;    // center (reference frame)
    double x_mov = 0, y_mov = 0;    // exact value at the center
    double scale = 1;               // coordinate normalization for the fit
    double support = 1;             // weight support radius (K-th neighbor)
    int degree = 2;                 // 2, or 1 after a singular-fit fallback
    double cx[5] = {0, 0, 0, 0, 0};  // u, v, u^2, uv, v^2 coefficients
    double cy[5] = {0, 0, 0, 0, 0};
  };

  // Maps reference-frame pixel coordinates to moving-frame coordinates.
  // If `extrapolated` is given, it is set when q falls outside every local
  // support and the nearest model alone was used.
  void apply(double x_ref, double y_ref, double& x_mov, double& y_mov,
             bool* extrapolated = nullptr) const;

  const std::vector<LocalModel>& models() const { return models_; }
  int degree1_fallbacks() const { return degree1_fallbacks_; }
  int neighbors() const { return neighbors_; }

 private:
  friend NonRigidTransform fit_nonrigid(const ControlPointSet&, int);
  std::vector<LocalModel> models_;
  int neighbors_ = 12;
  int degree1_fallbacks_ = 0;
};

// Resamples the moving image so its pixel pitch matches the reference pitch.
RGBImage match_fov(const ChannelImage& reference, const RGBImage& moving);

NonRigidTransform fit_nonrigid(const ControlPointSet& points, int neighbors = 12);

// Inverse-mapping resample: out(p) = moving(T(p)); unmapped pixels -> white.
RGBImage apply_transform(const NonRigidTransform& t, const RGBImage& moving,
                         int out_height, int out_width);

struct RegistrationReport {
  std::size_t n_points = 0;
  double mean_residual_px = 0;
  double max_residual_px = 0;
  int degree1_fallbacks = 0;
};

RegistrationReport registration_report(const NonRigidTransform& t, const ControlPointSet& holdout);

}  // namespace parstain
