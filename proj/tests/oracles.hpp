#pragma once

// Reference evaluations written independently of the library code paths.

#include <cmath>
#include <numbers>
#include <random>

#include "granular_biped/dynamics.hpp"
#include "granular_biped/terrain.hpp"

namespace oracle {

using namespace granular_biped;

inline constexpr double kPi = std::numbers::pi;

// Printed longitudinal and vertical intrusion rows with point-mass links:
//   M_s xdd + g_1 + g_2 + g_5 = F_x
//   M_s zdd + h_1 + h_2 + h_5 = F_z - M_s g   (z here is upward)
// Returned as the left side minus the force terms, i.e. what row 6 / row 7 of
// D qdd + C dq + G must equal, with the gravity term moved to the left.
inline double sagittal_row_x(const SagittalParams& p, const Vec7& q, const Vec7& dq, const Vec7& ddq) {
  const double Ms = p.m_b + p.m_t + p.m_c;
  const double k1 = p.m_t * p.a_1 + p.m_c * p.l_t;
  const double k2 = p.m_c * p.a_2;
  const double kb = p.m_b * p.l_b;
  const double g1 = k1 * (-std::cos(q(0)) * ddq(0) + std::sin(q(0)) * dq(0) * dq(0));
  const double g2 = k2 * (-std::cos(q(1)) * ddq(1) + std::sin(q(1)) * dq(1) * dq(1));
  const double g5 = kb * std::cos(q(4)) * ddq(4) - kb * std::sin(q(4)) * dq(4) * dq(4);
  return Ms * ddq(5) + g1 + g2 + g5;
}

inline double sagittal_row_z(const SagittalParams& p, const Vec7& q, const Vec7& dq, const Vec7& ddq) {
  const double Ms = p.m_b + p.m_t + p.m_c;
  const double k1 = p.m_t * p.a_1 + p.m_c * p.l_t;
  const double k2 = p.m_c * p.a_2;
  const double kb = p.m_b * p.l_b;
  const double h1 = k1 * (std::sin(q(0)) * ddq(0) + std::cos(q(0)) * dq(0) * dq(0));
  const double h2 = k2 * (std::sin(q(1)) * ddq(1) + std::cos(q(1)) * dq(1) * dq(1));
  const double h5 = -kb * std::sin(q(4)) * ddq(4) - kb * std::cos(q(4)) * dq(4) * dq(4);
  return Ms * ddq(6) + h1 + h2 + h5 + Ms * p.g;
}

// Swing-leg contribution with the same structure as g_1/g_2 and h_1/h_2.
inline double sagittal_swing_x(const SagittalParams& p, const Vec7& q, const Vec7& dq, const Vec7& ddq) {
  const double k3 = p.m_t_swing * p.a_1 + p.m_c_swing * p.l_t;
  const double k4 = p.m_c_swing * p.a_2;
  return (p.m_t_swing + p.m_c_swing) * ddq(5) + k3 * (-std::cos(q(2)) * ddq(2) + std::sin(q(2)) * dq(2) * dq(2)) +
         k4 * (-std::cos(q(3)) * ddq(3) + std::sin(q(3)) * dq(3) * dq(3));
}

inline double sagittal_swing_z(const SagittalParams& p, const Vec7& q, const Vec7& dq, const Vec7& ddq) {
  const double k3 = p.m_t_swing * p.a_1 + p.m_c_swing * p.l_t;
  const double k4 = p.m_c_swing * p.a_2;
  const double ms = p.m_t_swing + p.m_c_swing;
  return ms * ddq(6) + k3 * (std::sin(q(2)) * ddq(2) + std::cos(q(2)) * dq(2) * dq(2)) +
         k4 * (std::sin(q(3)) * ddq(3) + std::cos(q(3)) * dq(3) * dq(3)) + ms * p.g;
}

// Printed lateral row: M_f ydd + f_1 + f_2 + f_3 = F_y.
inline double frontal_row_y(const FrontalParams& p, const Vec5& q, const Vec5& dq, const Vec5& ddq) {
  const double Mf = p.m_b + p.m_1 + p.m_2;
  const double f1 = -(p.m_1 * p.d_1 + p.m_b * p.l_1 + p.m_2 * p.l_1) *
                    (std::cos(q(0)) * ddq(0) - std::sin(q(0)) * dq(0) * dq(0));
  const double f2 = (0.5 * p.m_b * p.b + p.m_2 * p.b) * (std::cos(q(1)) * ddq(1) - std::sin(q(1)) * dq(1) * dq(1));
  const double f3 = p.m_2 * p.d_2 * (std::cos(q(2)) * ddq(2) - std::sin(q(2)) * dq(2) * dq(2));
  return Mf * ddq(3) + f1 + f2 + f3;
}

// Generic granular stress fit written as the full double sum over
// m in {-1, 0, 1}, n in {0, 1}; N/m^3 after the zeta scale.
struct Coefficient {
  int m, n;
  double a, b;  // cosine and sine weights
};

inline LocalStress fourier_stress(double beta, double gamma, double zeta, const RftCoefficients& k) {
  const Coefficient z_terms[] = {{0, 0, k.A00, 0.0}, {1, 0, k.A10, 0.0}, {1, 1, 0.0, k.B11},
                                 {0, 1, 0.0, k.B01}, {-1, 1, 0.0, k.Bm11}};
  const Coefficient x_terms[] = {{1, 1, k.C11, 0.0}, {0, 1, k.C01, 0.0}, {-1, 1, k.Cm11, 0.0}, {1, 0, 0.0, k.D10}};
  const auto eval = [](const auto& terms, double b, double g) {
    double s = 0.0;
    for (const auto& t : terms) {
      const double arg = 2.0 * kPi * (t.m * b / kPi + t.n * g / (2.0 * kPi));
      s += t.a * std::cos(arg) + t.b * std::sin(arg);
    }
    return s;
  };
  // Fit domain is beta, gamma in [-pi/2, pi/2]; the rest follows from
  // pi-periodicity in beta and the left-right mirror.
  beta = std::remainder(beta, kPi);
  gamma = std::remainder(gamma, 2.0 * kPi);
  double ax, az;
  if (std::abs(gamma) <= 0.5 * kPi) {
    ax = eval(x_terms, beta, gamma);
    az = eval(z_terms, beta, gamma);
  } else {
    const double gm = std::remainder(kPi - gamma, 2.0 * kPi);
    ax = -eval(x_terms, -beta, gm);
    az = eval(z_terms, -beta, gm);
  }
  return {zeta * 1e6 * ax, zeta * 1e6 * az};
}

// Sagittal force by quadrature of the local stress over the solidified wedge:
// the triangle of depth z with face slope phi_s, area z^2 / (2 tan phi_s).
// Each point carries the mean of the stresses of the two symmetric faces.
inline GrfSagittal wedge_quadrature(const TerrainParams& t, double z, const Vec2& v, int n = 200) {
  if (z == 0.0) return {};
  const double gamma = std::atan2(v.y(), v.x());
  const double w = std::min(1.0, v.norm() / t.v_reg);
  const LocalStress lead = fourier_stress(t.phi_s, gamma, t.zeta, t.coefficients);
  const LocalStress trail = fourier_stress(-t.phi_s, gamma, t.zeta, t.coefficients);
  const LocalStress s_lead = fourier_stress(t.phi_s, 0.5 * kPi, t.zeta, t.coefficients);
  const LocalStress s_trail = fourier_stress(-t.phi_s, 0.5 * kPi, t.zeta, t.coefficients);
  const double run = z / std::tan(t.phi_s);
  double fx = 0.0, fz = 0.0;
  // Midpoint rule on an n x n grid in (depth, horizontal) with the
  // horizontal extent shrinking linearly to zero at the bottom.
  const double dd = z / n;
  for (int i = 0; i < n; ++i) {
    const double depth = (i + 0.5) * dd;
    const double width = run * (1.0 - depth / z);
    const double dx = width / n;
    for (int j = 0; j < n; ++j) {
      const double ax = w * 0.5 * (lead.alpha_x + trail.alpha_x) + (1.0 - w) * 0.5 * (s_lead.alpha_x + s_trail.alpha_x);
      const double az = w * 0.5 * (lead.alpha_z + trail.alpha_z) + (1.0 - w) * 0.5 * (s_lead.alpha_z + s_trail.alpha_z);
      fx -= ax * dx * dd;
      fz += az * dx * dd;
    }
  }
  return {fx * t.W, fz * t.W};
}

// Uniform random state in a box around the upright walking posture.
template <int N>
Eigen::Matrix<double, N, 1> uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = u(rng);
  return v;
}

inline SagittalParams random_sagittal(std::mt19937_64& rng, bool point_masses, bool swing_masses) {
  std::uniform_real_distribution<double> m(0.2, 6.0), l(0.05, 0.4), f(0.1, 1.0), inertia(0.0, 0.05);
  SagittalParams p;
  p.m_b = m(rng);
  p.m_t = m(rng);
  p.m_c = m(rng);
  p.m_t_swing = swing_masses ? m(rng) : 0.0;
  p.m_c_swing = swing_masses ? m(rng) : 0.0;
  p.l_t = l(rng);
  p.l_c = l(rng);
  p.l_b = l(rng);
  p.a_1 = f(rng) * p.l_t;
  p.a_2 = f(rng) * p.l_c;
  p.I_b = point_masses ? 0.0 : inertia(rng);
  p.I_t = point_masses ? 0.0 : inertia(rng);
  p.I_c = point_masses ? 0.0 : inertia(rng);
  p.I_t_swing = point_masses || !swing_masses ? 0.0 : inertia(rng);
  p.I_c_swing = point_masses || !swing_masses ? 0.0 : inertia(rng);
  return p;
}

inline FrontalParams random_frontal(std::mt19937_64& rng, bool point_masses) {
  std::uniform_real_distribution<double> m(0.2, 6.0), l(0.2, 0.6), f(0.1, 1.0), b(0.05, 0.3), inertia(0.0, 0.05);
  FrontalParams p;
  p.m_b = m(rng);
  p.m_1 = m(rng);
  p.m_2 = m(rng);
  p.l_1 = l(rng);
  p.d_1 = f(rng) * p.l_1;
  p.d_2 = f(rng) * p.l_1;
  p.b = b(rng);
  p.I_b = point_masses ? 0.0 : inertia(rng);
  p.I_1 = point_masses ? 0.0 : inertia(rng);
  p.I_2 = point_masses ? 0.0 : inertia(rng);
  return p;
}

}  // namespace oracle
