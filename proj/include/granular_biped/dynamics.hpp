#pragma once

#include <Eigen/Dense>

#include "granular_biped/linkage.hpp"

namespace granular_biped {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

/// Sagittal five-link walker. Lengths in m, masses in kg, inertias about the
/// link CoM in kg m^2. The swing-leg masses are separate so the translational
/// rows can be reduced to trunk + stance leg.
struct SagittalParams {
  double m_b = 5.0;
  double m_t = 0.8;
  double m_c = 0.4;
  double m_t_swing = 0.8;
  double m_c_swing = 0.4;
  double l_t = 0.22;
  double l_c = 0.22;
  double l_b = 0.10;
  double a_1 = 0.11;
  double a_2 = 0.11;
  double I_b = 5.0 * 0.2 * 0.2 / 12.0;
  double I_t = 0.8 * 0.22 * 0.22 / 12.0;
  double I_c = 0.4 * 0.22 * 0.22 / 12.0;
  double I_t_swing = 0.8 * 0.22 * 0.22 / 12.0;
  double I_c_swing = 0.4 * 0.22 * 0.22 / 12.0;
  double g = 9.81;

  /// M_s = m_b + m_t + m_c.
  double stance_mass() const { return m_b + m_t + m_c; }
  double total_mass() const { return m_b + m_t + m_c + m_t_swing + m_c_swing; }
  /// Slender-rod inertias m l^2 / 12 (trunk as a rod of length 2 l_b).
  void set_rod_inertias();
  void validate() const;
};

/// Frontal three-link model: stance leg, pelvis bar of width b carrying the
/// trunk mass at its midpoint, swing leg.
struct FrontalParams {
  double m_b = 5.0;
  double m_1 = 1.2;
  double m_2 = 1.2;
  double l_1 = 0.44;
  double d_1 = 0.44 - 0.55 / 3.0;
  double d_2 = 0.55 / 3.0;
  double b = 0.12;
  double I_b = 5.0 * 0.12 * 0.12 / 12.0;
  double I_1 = 1.2 * 0.44 * 0.44 / 12.0;
  double I_2 = 1.2 * 0.44 * 0.44 / 12.0;
  double g = 9.81;

  /// M_f = m_b + m_1 + m_2.
  double total_mass() const { return m_b + m_1 + m_2; }
  void validate() const;
  /// Lumps each sagittal leg into one frontal link.
  static FrontalParams from_sagittal(const SagittalParams& s, double hip_spacing);
};

namespace sagittal {
inline constexpr int kStanceThigh = 0;
inline constexpr int kStanceCalf = 1;
inline constexpr int kSwingThigh = 2;
inline constexpr int kSwingCalf = 3;
inline constexpr int kTrunk = 4;
inline constexpr int kX = 5;
inline constexpr int kZ = 6;
}  // namespace sagittal

namespace frontal {
inline constexpr int kStanceLeg = 0;
inline constexpr int kPelvis = 1;
inline constexpr int kSwingLeg = 2;
inline constexpr int kY = 3;
inline constexpr int kZ = 4;
}  // namespace frontal

/// q = [thigh, calf (stance); thigh, calf (swing); trunk; x, z]. Angles are
/// absolute from the vertical, positive clockwise with x forward and z up;
/// (x, z) is the translation of the hip, z positive upward.
struct SagittalState {
  Vec7 q = Vec7::Zero();
  Vec7 dq = Vec7::Zero();
};

/// q = [stance leg, pelvis, swing leg; y, z]; (y, z) is the stance contact
/// point displacement, z positive upward.
struct FrontalState {
  Vec5 q = Vec5::Zero();
  Vec5 dq = Vec5::Zero();
};

struct GrfSagittal {
  double F_x = 0.0;
  double F_z = 0.0;
};

struct GrfFrontal {
  double F_y = 0.0;
  double F_z = 0.0;
};

template <int N>
struct Equations {
  Eigen::Matrix<double, N, N> D;
  Eigen::Matrix<double, N, N> C;
  Eigen::Matrix<double, N, 1> G;
};

using SagittalEquations = Equations<7>;
using FrontalEquations = Equations<5>;

/// Sagittal linkage plus the named points the simulator needs.
class SagittalModel {
 public:
  explicit SagittalModel(const SagittalParams& params);

  const SagittalParams& params() const { return params_; }
  const PlanarLinkage& linkage() const { return linkage_; }

  const PointChain& hip() const { return hip_; }
  const PointChain& stance_knee() const { return stance_knee_; }
  const PointChain& stance_ankle() const { return stance_ankle_; }
  const PointChain& swing_ankle() const { return swing_ankle_; }

  SagittalEquations assemble(const SagittalState& s) const;
  /// D qdd = Q + J^T F - C dq - G with Q a full generalized force and J the
  /// stance-ankle Jacobian.
  Vec7 accel(const SagittalState& s, const Vec7& Q, const GrfSagittal& F) const;

  struct Pinned {
    Vec7 qdd;
    GrfSagittal F;  ///< constraint force on the foot
  };
  /// Stance ankle held at a fixed point (rigid ground). Baumgarte terms
  /// (position error pos_err, velocity error vel_err) are added to the
  /// constraint acceleration.
  Pinned accel_pinned(const SagittalState& s, const Vec7& Q, const Vec2& pos_err, const Vec2& vel_err,
                      double baumgarte_omega) const;

  double energy(const SagittalState& s) const;

 private:
  SagittalParams params_;
  PlanarLinkage linkage_;
  PointChain hip_, stance_knee_, stance_ankle_, swing_ankle_;
};

class FrontalModel {
 public:
  explicit FrontalModel(const FrontalParams& params);

  const FrontalParams& params() const { return params_; }
  const PlanarLinkage& linkage() const { return linkage_; }

  const PointChain& stance_hip() const { return stance_hip_; }
  const PointChain& swing_hip() const { return swing_hip_; }
  const PointChain& swing_foot() const { return swing_foot_; }

  FrontalEquations assemble(const FrontalState& s) const;
  Vec5 accel(const FrontalState& s, const Vec5& Q, const GrfFrontal& F) const;

  /// Vertical contact acceleration prescribed (owned by the sagittal plane).
  /// When clamp_lateral is set ydd = 0 and the returned F_y is the constraint
  /// force; otherwise F_y is the applied lateral force.
  struct Prescribed {
    Vec5 qdd;
    double F_y;
  };
  Prescribed accel_prescribed_z(const FrontalState& s, const Vec5& Q, double F_y, double zdd,
                                bool clamp_lateral) const;

  double energy(const FrontalState& s) const;

 private:
  FrontalParams params_;
  PlanarLinkage linkage_;
  PointChain stance_hip_, swing_hip_, swing_foot_;
};

/// B_s = [I_4 0]^T and B_f = [0 I_2 0]^T.
Eigen::Matrix<double, 7, 4> sagittal_actuation_matrix();
Eigen::Matrix<double, 5, 2> frontal_actuation_matrix();

SagittalEquations assemble_sagittal(const SagittalParams& params, const SagittalState& state);
/// D qdd + C dq + G = B_s tau_s + J_s^T F_s solved for qdd.
Vec7 sagittal_accel(const SagittalParams& params, const SagittalState& state, const Vec4& tau_s,
                    const GrfSagittal& F);

FrontalEquations assemble_frontal(const FrontalParams& params, const FrontalState& state);
Vec5 frontal_accel(const FrontalParams& params, const FrontalState& state, const Vec2& tau_f,
                   const GrfFrontal& F);

}  // namespace granular_biped
