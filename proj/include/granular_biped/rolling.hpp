#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace granular_biped {

/// Convex sole contour z_r = S(x_r) in the foot frame, opening upward with
/// the apex near x_r = 0. Either an analytic semi-cylinder or a natural cubic
/// spline through tabulated samples.
class FootShape {
 public:
  enum class Kind { SemiCylinder, Tabulated };

  static FootShape semi_cylinder(double radius);
  /// Samples (x_r, z_r); at least 16, strictly increasing in x_r, convex.
  static FootShape tabulated(const std::vector<Eigen::Vector2d>& points);

  Kind kind() const { return kind_; }
  double radius() const { return radius_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }

  double height(double x) const;
  double slope(double x) const;
  double curvature(double x) const;

 private:
  FootShape() = default;
  int segment(double x) const;

  Kind kind_ = Kind::SemiCylinder;
  double radius_ = 0.0;
  double x_min_ = 0.0;
  double x_max_ = 0.0;
  std::vector<double> xs_, zs_, m_;  // knots and second derivatives
};

struct ContactPoint {
  double x_r = 0.0;
  double z_r = 0.0;
};

/// Stance bookkeeping. delta_theta_r is always theta_r1 - theta_r0.
struct ContactState {
  Eigen::Vector2d c0 = Eigen::Vector2d::Zero();
  Eigen::Vector2d c1 = Eigen::Vector2d::Zero();
  double theta_r0 = 0.0;
  double theta_r1 = 0.0;
  double delta_theta_r = 0.0;
  double gamma = 0.0;
  double R_eff = 0.0;
};

struct RollingThresholds {
  double eps_v = 1e-6;      ///< m/s
  double eps_omega = 1e-4;  ///< rad/s
};

/// Contour point that is lowest in the world for the given foot pitch, i.e.
/// where the rotated tangent is horizontal (S'(x_r) = tan(pitch)). Bisection
/// to `tol` in x_r. Throws ContactBoundaryError when the tangent condition has
/// no interior solution.
ContactPoint lowest_point(const FootShape& shape, double foot_pitch, double tol = 1e-10);

/// World position of a contour point for a given pitch, relative to the
/// foot-frame origin: (x cos p + S sin p, S cos p - x sin p).
Eigen::Vector2d world_offset(const FootShape& shape, double foot_pitch, double x_r);

/// tan(theta_r) = dS/dx_r at the contact.
double orientation_angle(const FootShape& shape, const ContactPoint& contact);

inline double rolling_angle(double theta_r0, double theta_r1) { return theta_r1 - theta_r0; }

/// gamma = atan2(zdot_s, xdot_s); empty when the speed is below eps_v.
std::optional<double> velocity_angle(double dx_s, double dz_s, double eps_v = 1e-6);

/// R_eff = |v_s| / |theta_r dot|. Throws NoRotationError below eps_omega.
double effective_radius(const Eigen::Vector2d& v_s, double dtheta_r, double eps_omega = 1e-4);

}  // namespace granular_biped
