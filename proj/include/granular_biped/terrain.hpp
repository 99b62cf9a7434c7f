#pragma once

#include <optional>
#include <vector>

#include "granular_biped/dynamics.hpp"

namespace granular_biped {

/// Fourier coefficients of the generic granular resistive-force fit, in
/// N/cm^3. Stresses are
///   alpha_z = sum_{m=-1..1, n=0..1} A_mn cos(2 pi (m beta/pi + n gamma/2pi)) + B_mn sin(...)
///   alpha_x = sum_{m=-1..1, n=1}    C_mn cos(...) + D_mn sin(...)
/// with only the listed coefficients non-zero.
struct RftCoefficients {
  double A00 = 0.206;
  double A10 = 0.169;
  double B11 = 0.212;
  double B01 = 0.358;
  double Bm11 = 0.055;
  double C11 = -0.124;
  double C01 = 0.253;
  double Cm11 = 0.007;
  double D10 = 0.088;

  static RftCoefficients generic() { return {}; }
};

/// Stress per unit depth [N/m^3]. alpha_z > 0 resists downward motion;
/// alpha_x > 0 resists motion along +x.
struct LocalStress {
  double alpha_x = 0.0;
  double alpha_z = 0.0;
};

struct TerrainParams {
  double phi_s = 0.6632;    ///< internal friction angle [rad] (38 deg)
  double zeta = 1.36;       ///< stress scaling factor
  double lambda = 0.03;     ///< bulldozing saturation length [m]
  double rho = 1660.0;      ///< bulk density [kg/m^3]
  double W = 0.06;          ///< foot width [m]
  double sand_level = 0.12; ///< surface height [m]
  /// Below this intrusion speed the stress blends linearly towards static
  /// vertical support; 0 disables the blend.
  double v_reg = 0.01;
  double eps_v = 1e-6;      ///< undefined-direction speed threshold [m/s]
  bool element_resolved = false;
  int elements = 32;        ///< sole elements for the element-resolved mode (<= 64)
  RftCoefficients coefficients;

  void validate() const;
};

/// Sagittal and frontal intrusion velocities use the sinkage-positive-down
/// convention: v_s = (xdot_s, zdot_s), v_f = (ydot_s, zdot_s).
struct IntrusionKinematics {
  double z_s = 0.0;
  Vec2 v_s = Vec2::Zero();
  Vec2 v_f = Vec2::Zero();
  double y_s = 0.0;
  double gamma = 0.0;  ///< informational; forces recompute it from v_s
  double beta = 0.0;
};

LocalStress local_stress(double beta, double gamma, double zeta,
                         const RftCoefficients& coeffs = RftCoefficients::generic());

/// Stress of the symmetric solidification wedge (faces at +/- phi_s) for an
/// intrusion direction gamma, including the low-speed blend.
LocalStress wedge_stress(const TerrainParams& terrain, const Vec2& v_s);

/// I(z) = z^2 and g(z) = z^2 / 2.
inline double wedge_depth_function(double z) { return z * z; }
inline double bulldozing_depth_function(double z) { return 0.5 * z * z; }

/// F_j = alpha_j / (2 tan phi_s) * W * I(z_s); F_z up, F_x opposing slip.
GrfSagittal sagittal_forces(const TerrainParams& terrain, const IntrusionKinematics& kin);

/// Same stresses summed over the submerged arc of a semi-cylindrical sole.
GrfSagittal sagittal_forces_resolved(const TerrainParams& terrain, double foot_radius,
                                     const IntrusionKinematics& kin);

/// Lateral stress alpha_y for a vertical side face [N/m^3].
double lateral_stress(const TerrainParams& terrain, const Vec2& v_f);

/// Bulldozing resistance magnitude in the slip direction,
/// lambda (1 - exp(-|y_s|/lambda)) alpha_y g(z_s).
double lateral_force(const TerrainParams& terrain, const IntrusionKinematics& kin);

/// Forces for unit-speed intrusion along directions spread over a full turn;
/// at a fixed depth they bound the set of forces the medium can supply
/// without yielding.
std::vector<Vec2> sagittal_yield_locus(const TerrainParams& terrain, double z_s, int directions = 72);
/// Point-in-polygon test (F_x, F_z) against a closed locus.
bool inside_locus(const std::vector<Vec2>& locus, const Vec2& force);
/// Point where the ray from the origin through `force` leaves the locus.
Vec2 radial_projection(const std::vector<Vec2>& locus, const Vec2& force);

enum class PenetrationDirection { Vertical, Horizontal };

struct PenetrationRecord {
  double x = 0.0;  ///< depth (vertical) or displacement (horizontal) [m]
  double force = 0.0;
  PenetrationDirection direction = PenetrationDirection::Vertical;
};

struct CalibrationResult {
  double zeta = 0.0;
  double lambda = 0.0;
  double residual_vertical = 0.0;    ///< RMS [N]
  double residual_horizontal = 0.0;  ///< RMS [N]
};

/// Model force of a vertical plate test at depth z for a given zeta.
double vertical_penetration_force(const TerrainParams& terrain, double depth);
/// Model force of a horizontal drag at `test_depth` after displacement y.
double horizontal_penetration_force(const TerrainParams& terrain, double displacement, double test_depth);

/// Least-squares fit of zeta (vertical curves) then lambda (horizontal curves).
CalibrationResult calibrate(const std::vector<PenetrationRecord>& vertical,
                            const std::vector<PenetrationRecord>& horizontal, const TerrainParams& nominal,
                            double horizontal_test_depth = 0.03);

}  // namespace granular_biped
