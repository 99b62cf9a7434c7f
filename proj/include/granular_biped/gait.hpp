#pragma once

#include <Eigen/Dense>

#include "granular_biped/dynamics.hpp"

namespace granular_biped {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct GaitConfig {
  double cycle_period = 0.4;  ///< s
  double duty = 0.5;          ///< stance fraction
  double swing_height = 0.10; ///< m
  double v_target = 0.2;      ///< m/s
  /// Overrides the proportional placement law when positive.
  double step_length_override = -1.0;

  double stance_duration() const { return cycle_period * duty; }
  double swing_duration() const { return cycle_period * (1.0 - duty); }
  /// Body advance per stance, v_target * cycle_period * duty.
  double step_length() const;
  void validate() const;
};

enum class Leg { Left, Right };
inline Leg other(Leg l) { return l == Leg::Left ? Leg::Right : Leg::Left; }

/// Actuation joint order: left hip roll, thigh, knee; right hip roll, thigh, knee.
namespace joint {
inline constexpr int kLeftHip = 0;
inline constexpr int kLeftThigh = 1;
inline constexpr int kLeftKnee = 2;
inline constexpr int kRightHip = 3;
inline constexpr int kRightThigh = 4;
inline constexpr int kRightKnee = 5;
inline int hip(Leg l) { return l == Leg::Left ? kLeftHip : kRightHip; }
inline int thigh(Leg l) { return l == Leg::Left ? kLeftThigh : kRightThigh; }
inline int knee(Leg l) { return l == Leg::Left ? kLeftKnee : kRightKnee; }
}  // namespace joint

/// Cycloid over the swing phase: x = L (phi - sin(2 pi phi) / 2 pi),
/// z = h (1 - cos(2 pi phi)) / 2.
Vec2 cycloid_swing(double phase, double step_length, double swing_height);
/// Time derivative with respect to phase.
Vec2 cycloid_swing_rate(double phase, double step_length, double swing_height);

struct LegAngles {
  double thigh = 0.0;  ///< absolute, from the downward vertical convention of SagittalState
  double calf = 0.0;
};

/// Foot (ankle) position relative to the hip, x forward, z up.
Vec2 leg_fk(double thigh_len, double calf_len, const LegAngles& a);
/// Knee-backward solution: the knee lies behind the hip-ankle line.
LegAngles leg_ik(double thigh_len, double calf_len, const Vec2& target);

/// q_a = S_s q^s for the sagittal joints; relative angle = child - parent.
Eigen::Matrix<double, 6, 5> sagittal_map(Leg stance);
Vec6 actuation_from_sagittal(const Vec5& q_sagittal, Leg stance);
/// Inverse on the actuated subspace given the trunk angle.
Vec5 sagittal_from_actuation(const Vec6& q_a, double trunk, Leg stance);
/// tau_i^s = sum_j dq_j/dq_i^s tau_j, i = 1..4.
Vec4 sagittal_torques(const Vec6& tau_a, Leg stance);
/// Full generalized force S_s^T tau_a including the trunk reaction.
Vec5 sagittal_generalized_forces(const Vec6& tau_a, Leg stance);

struct HipAngles {
  double stance = 0.0;
  double swing = 0.0;
};

/// q_stance_hip = -q1^f + q2^f, q_swing_hip = pi - q2^f + q3^f.
HipAngles hips_from_frontal(const Vec3& q_frontal);
Vec3 frontal_from_hips(double stance_leg_angle, const HipAngles& hips);
/// tau_2^f = tau_stance - tau_swing, tau_3^f = tau_swing.
Vec2 frontal_torques(double tau_stance_hip, double tau_swing_hip);
/// Full generalized force including -tau_stance on the stance leg.
Vec3 frontal_generalized_forces(double tau_stance_hip, double tau_swing_hip);

struct PdGains {
  Vec6 kp = Vec6::Constant(100.0);
  Vec6 kd = Vec6::Constant(2.0);
  Vec6 tau_max = Vec6::Constant(60.0);
};

/// tau = Kp (q_ref - q) + Kd (dq_ref - dq), clamped to +/- tau_max.
Vec6 track_joints(const Vec6& q_ref, const Vec6& dq_ref, const Vec6& q, const Vec6& dq, const PdGains& gains);

/// Kd giving critical damping of a link of inertia `inertia` under Kp.
inline double critical_damping(double kp, double inertia) { return 2.0 * std::sqrt(kp * inertia); }

}  // namespace granular_biped
