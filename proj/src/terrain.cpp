#include "granular_biped/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kPerCm3ToPerM3 = 1e6;

double wrap_to_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

// Plate orientation is periodic in pi.
double wrap_beta(double b) {
  b = std::remainder(b, kPi);
  return b;
}

// Fit evaluated inside its domain beta, gamma in [-pi/2, pi/2], N/cm^3.
LocalStress raw_stress(double beta, double gamma, const RftCoefficients& c) {
  const double two_b = 2.0 * beta;
  LocalStress s;
  s.alpha_z = c.A00 + c.A10 * std::cos(two_b) + c.B11 * std::sin(two_b + gamma) + c.B01 * std::sin(gamma) +
              c.Bm11 * std::sin(-two_b + gamma);
  s.alpha_x = c.C11 * std::cos(two_b + gamma) + c.C01 * std::cos(gamma) + c.Cm11 * std::cos(-two_b + gamma) +
              c.D10 * std::sin(two_b);
  return s;
}

LocalStress average(const LocalStress& a, const LocalStress& b) {
  return {0.5 * (a.alpha_x + b.alpha_x), 0.5 * (a.alpha_z + b.alpha_z)};
}

LocalStress blend(const LocalStress& stat, const LocalStress& dyn, double s) {
  return {(1.0 - s) * stat.alpha_x + s * dyn.alpha_x, (1.0 - s) * stat.alpha_z + s * dyn.alpha_z};
}

double blend_weight(const TerrainParams& t, double speed) {
  if (speed < t.eps_v) return 0.0;
  if (t.v_reg <= 0.0) return 1.0;
  return std::min(1.0, speed / t.v_reg);
}

LocalStress static_wedge(const TerrainParams& t) {
  return average(local_stress(t.phi_s, kHalfPi, t.zeta, t.coefficients),
                 local_stress(-t.phi_s, kHalfPi, t.zeta, t.coefficients));
}

}  // namespace

void TerrainParams::validate() const {
  if (!(phi_s > 0.0 && phi_s < kHalfPi)) throw DomainError("phi_s must lie in (0, pi/2)");
  if (!(zeta > 0.0)) throw DomainError("zeta must be positive");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (!(W > 0.0)) throw DomainError("W must be positive");
  if (!(v_reg >= 0.0)) throw DomainError("v_reg must be non-negative");
  if (!(eps_v > 0.0)) throw DomainError("eps_v must be positive");
  if (elements < 1 || elements > 64) throw DomainError("elements must lie in [1, 64]");
}

LocalStress local_stress(double beta, double gamma, double zeta, const RftCoefficients& coeffs) {
  beta = wrap_beta(beta);
  gamma = wrap_to_pi(gamma);
  LocalStress s;
  if (std::abs(gamma) <= kHalfPi) {
    s = raw_stress(beta, gamma, coeffs);
  } else {
    // Left-right mirror: x -> -x maps (beta, gamma) to (-beta, pi - gamma).
    const LocalStress m = raw_stress(-beta, wrap_to_pi(kPi - gamma), coeffs);
    s = {-m.alpha_x, m.alpha_z};
  }
  const double scale = zeta * kPerCm3ToPerM3;
  return {scale * s.alpha_x, scale * s.alpha_z};
}

LocalStress wedge_stress(const TerrainParams& terrain, const Vec2& v_s) {
  const LocalStress stat = static_wedge(terrain);
  const double speed = v_s.norm();
  const double w = blend_weight(terrain, speed);
  if (w == 0.0) return stat;
  const double gamma = std::atan2(v_s.y(), v_s.x());
  const LocalStress dyn = average(local_stress(terrain.phi_s, gamma, terrain.zeta, terrain.coefficients),
                                  local_stress(-terrain.phi_s, gamma, terrain.zeta, terrain.coefficients));
  return blend(stat, dyn, w);
}

GrfSagittal sagittal_forces(const TerrainParams& terrain, const IntrusionKinematics& kin) {
  if (kin.z_s < 0.0) throw DomainError("sagittal_forces: negative intrusion depth");
  if (kin.z_s == 0.0) return {};
  const LocalStress a = wedge_stress(terrain, kin.v_s);
  const double area = terrain.W * wedge_depth_function(kin.z_s) / (2.0 * std::tan(terrain.phi_s));
  return {-a.alpha_x * area, a.alpha_z * area};
}

std::vector<Vec2> sagittal_yield_locus(const TerrainParams& terrain, double z_s, int directions) {
  if (directions < 8) throw DomainError("yield locus needs at least 8 directions");
  std::vector<Vec2> locus;
  locus.reserve(directions);
  IntrusionKinematics kin;
  kin.z_s = std::max(z_s, 0.0);
  for (int k = 0; k < directions; ++k) {
    const double g = 2.0 * std::numbers::pi * k / directions;
    kin.v_s = {std::cos(g), std::sin(g)};
    const GrfSagittal f = sagittal_forces(terrain, kin);
    locus.emplace_back(f.F_x, f.F_z);
  }
  return locus;
}

bool inside_locus(const std::vector<Vec2>& locus, const Vec2& force) {
  bool inside = false;
  const std::size_t n = locus.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = locus[i];
    const Vec2& b = locus[j];
    if ((a.y() > force.y()) != (b.y() > force.y())) {
      const double x = a.x() + (force.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (force.x() < x) inside = !inside;
    }
  }
  return inside;
}

Vec2 radial_projection(const std::vector<Vec2>& locus, const Vec2& force) {
  const double norm = force.norm();
  if (norm == 0.0 || locus.empty()) return Vec2::Zero();
  const Vec2 d = force / norm;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = locus.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = locus[i];
    const Vec2 e = locus[(i + 1) % n] - a;
    // Solve t d = a + s e.
    const double det = d.x() * (-e.y()) - d.y() * (-e.x());
    if (std::abs(det) < 1e-300) continue;
    const double t = (a.x() * (-e.y()) - a.y() * (-e.x())) / det;
    const double s = (d.x() * a.y() - d.y() * a.x()) / det;
    if (t > 0.0 && s >= 0.0 && s <= 1.0) best = std::min(best, t);
  }
  return std::isfinite(best) ? Vec2(best * d) : Vec2::Zero();
}

GrfSagittal sagittal_forces_resolved(const TerrainParams& terrain, double foot_radius,
                                     const IntrusionKinematics& kin) {
  if (kin.z_s < 0.0) throw DomainError("sagittal_forces_resolved: negative intrusion depth");
  if (!(foot_radius > 0.0)) throw DomainError("foot radius must be positive");
  if (kin.z_s == 0.0) return {};

  const double cos_max = 1.0 - kin.z_s / foot_radius;
  const double psi_max = cos_max <= 0.0 ? kHalfPi : std::acos(cos_max);
  const int n = terrain.elements;
  const double dpsi = 2.0 * psi_max / n;

  const double speed = kin.v_s.norm();
  const double w = blend_weight(terrain, speed);
  const double gamma = speed < terrain.eps_v ? kHalfPi : std::atan2(kin.v_s.y(), kin.v_s.x());
  // World velocity with z up.
  const Vec2 v_world(kin.v_s.x(), -kin.v_s.y());

  GrfSagittal f;
  for (int i = 0; i < n; ++i) {
    const double psi = -psi_max + (i + 0.5) * dpsi;
    const double depth = kin.z_s - foot_radius * (1.0 - std::cos(psi));
    if (depth <= 0.0) continue;
    const double dA = terrain.W * foot_radius * dpsi;
    const LocalStress stat = local_stress(psi, kHalfPi, terrain.zeta, terrain.coefficients);
    LocalStress a{(1.0 - w) * stat.alpha_x, (1.0 - w) * stat.alpha_z};
    const Vec2 normal(std::sin(psi), -std::cos(psi));
    if (w > 0.0 && normal.dot(v_world) > 0.0) {
      const LocalStress dyn = local_stress(psi, gamma, terrain.zeta, terrain.coefficients);
      a.alpha_x += w * dyn.alpha_x;
      a.alpha_z += w * dyn.alpha_z;
    }
    f.F_x -= a.alpha_x * depth * dA;
    f.F_z += a.alpha_z * depth * dA;
  }
  return f;
}

double lateral_stress(const TerrainParams& terrain, const Vec2& v_f) {
  const double gamma_f = v_f.norm() < terrain.eps_v ? 0.0 : std::atan2(v_f.y(), std::abs(v_f.x()));
  return local_stress(kHalfPi, gamma_f, terrain.zeta, terrain.coefficients).alpha_x;
}

double lateral_force(const TerrainParams& terrain, const IntrusionKinematics& kin) {
  if (kin.z_s <= 0.0 || kin.y_s == 0.0) return 0.0;
  const double lam = terrain.lambda;
  return lam * (1.0 - std::exp(-std::abs(kin.y_s) / lam)) * lateral_stress(terrain, kin.v_f) *
         bulldozing_depth_function(kin.z_s);
}

// ---------------------------------------------------------------------------

double vertical_penetration_force(const TerrainParams& terrain, double depth) {
  IntrusionKinematics kin;
  kin.z_s = depth;
  return sagittal_forces(terrain, kin).F_z;
}

double horizontal_penetration_force(const TerrainParams& terrain, double displacement, double test_depth) {
  IntrusionKinematics kin;
  kin.z_s = test_depth;
  kin.y_s = displacement;
  return lateral_force(terrain, kin);
}

namespace {

void check_records(const std::vector<PenetrationRecord>& recs, const char* what) {
  if (recs.size() < 5) throw CalibrationError(std::string(what) + ": at least 5 records required");
  double prev = 0.0;
  bool any_force = false;
  for (const auto& r : recs) {
    if (!std::isfinite(r.x) || !std::isfinite(r.force)) throw CalibrationError(std::string(what) + ": non-finite sample");
    if (!(r.x > 0.0)) throw CalibrationError(std::string(what) + ": independent variable must be strictly positive");
    if (r.x < prev) throw CalibrationError(std::string(what) + ": samples must be ordered by the independent variable");
    prev = r.x;
    any_force = any_force || r.force != 0.0;
  }
  if (!any_force) throw CalibrationError(std::string(what) + ": all forces are zero");
}

}  // namespace

CalibrationResult calibrate(const std::vector<PenetrationRecord>& vertical,
                            const std::vector<PenetrationRecord>& horizontal, const TerrainParams& nominal,
                            double horizontal_test_depth) {
  nominal.validate();
  check_records(vertical, "vertical");
  check_records(horizontal, "horizontal");
  if (!(horizontal_test_depth > 0.0)) throw CalibrationError("horizontal test depth must be positive");

  // Forces are linear in zeta: F = zeta * b(z).
  TerrainParams unit = nominal;
  unit.zeta = 1.0;
  double fb = 0.0, bb = 0.0;
  for (const auto& r : vertical) {
    const double b = vertical_penetration_force(unit, r.x);
    fb += r.force * b;
    bb += b * b;
  }
  if (bb <= 0.0) throw CalibrationError("vertical data carry no information on zeta");
  const double zeta = fb / bb;
  if (!(zeta > 0.0)) throw CalibrationError("vertical data imply a non-positive zeta");

  TerrainParams fitted = nominal;
  fitted.zeta = zeta;
  const auto sse = [&](double log_lambda) {
    TerrainParams t = fitted;
    t.lambda = std::exp(log_lambda);
    double s = 0.0;
    for (const auto& r : horizontal) {
      const double e = r.force - horizontal_penetration_force(t, r.x, horizontal_test_depth);
      s += e * e;
    }
    return s;
  };

  // Coarse scan to bracket the global minimum, then Brent.
  const double lo = std::log(1e-5), hi = std::log(10.0);
  constexpr int kScan = 200;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double u = lo + (hi - lo) * i / kScan;
    const double v = sse(u);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double step = (hi - lo) / kScan;
  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(kScan, best + 1) * step;
  const auto [u_min, sse_min] =
      boost::math::tools::brent_find_minima(sse, a, b, std::numeric_limits<double>::digits);
  fitted.lambda = std::exp(u_min);

  CalibrationResult res;
  res.zeta = zeta;
  res.lambda = fitted.lambda;
  double rv = 0.0;
  for (const auto& r : vertical) {
    const double e = r.force - vertical_penetration_force(fitted, r.x);
    rv += e * e;
  }
  res.residual_vertical = std::sqrt(rv / vertical.size());
  res.residual_horizontal = std::sqrt(sse_min / horizontal.size());
  return res;
}

}  // namespace granular_biped
