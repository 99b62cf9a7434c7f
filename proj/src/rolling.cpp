#include "granular_biped/rolling.hpp"

#include <algorithm>
#include <cmath>

#include "granular_biped/errors.hpp"

namespace granular_biped {

FootShape FootShape::semi_cylinder(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("semi-cylinder radius must be positive");
  FootShape s;
  s.kind_ = Kind::SemiCylinder;
  s.radius_ = radius;
  s.x_min_ = -radius;
  s.x_max_ = radius;
  return s;
}

FootShape FootShape::tabulated(const std::vector<Eigen::Vector2d>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 16) throw DomainError("tabulated contour needs at least 16 samples");
  for (int i = 1; i < n; ++i) {
    if (!(points[i].x() > points[i - 1].x())) throw DomainError("tabulated contour x_r must be strictly increasing");
  }

  FootShape s;
  s.kind_ = Kind::Tabulated;
  s.xs_.resize(n);
  s.zs_.resize(n);
  for (int i = 0; i < n; ++i) {
    s.xs_[i] = points[i].x();
    s.zs_[i] = points[i].y();
  }
  s.x_min_ = s.xs_.front();
  s.x_max_ = s.xs_.back();

  // Natural spline: tridiagonal system for the knot second derivatives.
  s.m_.assign(n, 0.0);
  std::vector<double> diag(n, 1.0), upper(n, 0.0), lower(n, 0.0), rhs(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    const double h0 = s.xs_[i] - s.xs_[i - 1];
    const double h1 = s.xs_[i + 1] - s.xs_[i];
    lower[i] = h0;
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((s.zs_[i + 1] - s.zs_[i]) / h1 - (s.zs_[i] - s.zs_[i - 1]) / h0);
  }
  for (int i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  s.m_[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) s.m_[i] = (rhs[i] - upper[i] * s.m_[i + 1]) / diag[i];

  const double scale = std::max(1.0, *std::max_element(s.m_.begin(), s.m_.end(),
                                                       [](double a, double b) { return std::abs(a) < std::abs(b); }));
  for (double m : s.m_) {
    if (m < -1e-9 * std::abs(scale)) throw DomainError("tabulated contour is not convex");
  }
  return s;
}

int FootShape::segment(double x) const {
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const int i = static_cast<int>(it - xs_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(xs_.size()) - 2);
}

double FootShape::height(double x) const {
  if (kind_ == Kind::SemiCylinder) return radius_ - std::sqrt(std::max(0.0, radius_ * radius_ - x * x));
  const int i = segment(x);
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h;
  const double b = (x - xs_[i]) / h;
  return a * zs_[i] + b * zs_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double FootShape::slope(double x) const {
  if (kind_ == Kind::SemiCylinder) return x / std::sqrt(std::max(1e-300, radius_ * radius_ - x * x));
  const int i = segment(x);
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h;
  const double b = (x - xs_[i]) / h;
  return (zs_[i + 1] - zs_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] + (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
}

double FootShape::curvature(double x) const {
  if (kind_ == Kind::SemiCylinder) {
    const double r2 = radius_ * radius_ - x * x;
    return radius_ * radius_ / (r2 * std::sqrt(r2));
  }
  const int i = segment(x);
  const double h = xs_[i + 1] - xs_[i];
  return ((xs_[i + 1] - x) * m_[i] + (x - xs_[i]) * m_[i + 1]) / h;
}

ContactPoint lowest_point(const FootShape& shape, double foot_pitch, double tol) {
  double lo = shape.x_min();
  double hi = shape.x_max();
  if (shape.kind() == FootShape::Kind::SemiCylinder) {
    // Open domain; the slope is unbounded at the rim.
    const double shrink = 1e-12 * shape.radius();
    lo += shrink;
    hi -= shrink;
  }
  const auto f = [&](double x) { return std::atan(shape.slope(x)) - foot_pitch; };
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo > 0.0 || f_hi < 0.0) throw ContactBoundaryError("lowest point falls on the contour boundary");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, shape.height(x)};
}

Eigen::Vector2d world_offset(const FootShape& shape, double foot_pitch, double x_r) {
  const double s = shape.height(x_r);
  const double c = std::cos(foot_pitch), sn = std::sin(foot_pitch);
  return {x_r * c + s * sn, s * c - x_r * sn};
}

double orientation_angle(const FootShape& shape, const ContactPoint& contact) {
  return std::atan(shape.slope(contact.x_r));
}

std::optional<double> velocity_angle(double dx_s, double dz_s, double eps_v) {
  if (std::hypot(dx_s, dz_s) < eps_v) return std::nullopt;
  return std::atan2(dz_s, dx_s);
}

double effective_radius(const Eigen::Vector2d& v_s, double dtheta_r, double eps_omega) {
  if (std::abs(dtheta_r) < eps_omega) throw NoRotationError("foot pitch rate below rotation threshold");
  return v_s.norm() / std::abs(dtheta_r);
}

}  // namespace granular_biped
