#include "granular_biped/gait.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double GaitConfig::step_length() const {
  if (step_length_override > 0.0) return step_length_override;
  return v_target * cycle_period * duty;
}

void GaitConfig::validate() const {
  if (!(cycle_period > 0.0)) throw DomainError("cycle_period must be positive");
  if (!(duty > 0.0 && duty < 1.0)) throw DomainError("duty must lie in (0, 1)");
  if (!(swing_height > 0.0)) throw DomainError("swing_height must be positive");
  if (!(v_target >= 0.0)) throw DomainError("v_target must be non-negative");
}

Vec2 cycloid_swing(double phase, double step_length, double swing_height) {
  if (!(phase >= 0.0 && phase <= 1.0)) throw DomainError("swing phase must lie in [0, 1]");
  const double a = kTwoPi * phase;
  return {step_length * (phase - std::sin(a) / kTwoPi), swing_height * 0.5 * (1.0 - std::cos(a))};
}

Vec2 cycloid_swing_rate(double phase, double step_length, double swing_height) {
  if (!(phase >= 0.0 && phase <= 1.0)) throw DomainError("swing phase must lie in [0, 1]");
  const double a = kTwoPi * phase;
  return {step_length * (1.0 - std::cos(a)), swing_height * kPi * std::sin(a)};
}

Vec2 leg_fk(double thigh_len, double calf_len, const LegAngles& a) {
  return {-thigh_len * std::sin(a.thigh) - calf_len * std::sin(a.calf),
          -thigh_len * std::cos(a.thigh) - calf_len * std::cos(a.calf)};
}

LegAngles leg_ik(double thigh_len, double calf_len, const Vec2& target) {
  const double r = target.norm();
  if (!(r > std::abs(thigh_len - calf_len) && r < thigh_len + calf_len)) {
    throw UnreachableTargetError("leg_ik: target outside the reachable annulus");
  }
  // Direction of the hip-ankle line in the hanging-link convention.
  const double line = std::atan2(-target.x(), -target.y());
  const double at_hip = std::acos(std::clamp((thigh_len * thigh_len + r * r - calf_len * calf_len) /
                                                 (2.0 * thigh_len * r), -1.0, 1.0));
  const double at_ankle = std::acos(std::clamp((calf_len * calf_len + r * r - thigh_len * thigh_len) /
                                                   (2.0 * calf_len * r), -1.0, 1.0));
  // Positive angles rotate a hanging link backwards, so the knee goes behind
  // the line when the thigh angle is increased.
  return {line + at_hip, line - at_ankle};
}

// ---------------------------------------------------------------------------

Eigen::Matrix<double, 6, 5> sagittal_map(Leg stance) {
  using namespace sagittal;
  Eigen::Matrix<double, 6, 5> S = Eigen::Matrix<double, 6, 5>::Zero();
  const Leg swing = other(stance);
  S(joint::thigh(stance), kStanceThigh) = 1.0;
  S(joint::thigh(stance), kTrunk) = -1.0;
  S(joint::knee(stance), kStanceCalf) = 1.0;
  S(joint::knee(stance), kStanceThigh) = -1.0;
  S(joint::thigh(swing), kSwingThigh) = 1.0;
  S(joint::thigh(swing), kTrunk) = -1.0;
  S(joint::knee(swing), kSwingCalf) = 1.0;
  S(joint::knee(swing), kSwingThigh) = -1.0;
  return S;
}

Vec6 actuation_from_sagittal(const Vec5& q_sagittal, Leg stance) { return sagittal_map(stance) * q_sagittal; }

Vec5 sagittal_from_actuation(const Vec6& q_a, double trunk, Leg stance) {
  using namespace sagittal;
  const Leg swing = other(stance);
  Vec5 q;
  q(kTrunk) = trunk;
  q(kStanceThigh) = q_a(joint::thigh(stance)) + trunk;
  q(kStanceCalf) = q_a(joint::knee(stance)) + q(kStanceThigh);
  q(kSwingThigh) = q_a(joint::thigh(swing)) + trunk;
  q(kSwingCalf) = q_a(joint::knee(swing)) + q(kSwingThigh);
  return q;
}

Vec5 sagittal_generalized_forces(const Vec6& tau_a, Leg stance) {
  return sagittal_map(stance).transpose() * tau_a;
}

Vec4 sagittal_torques(const Vec6& tau_a, Leg stance) { return sagittal_generalized_forces(tau_a, stance).head<4>(); }

HipAngles hips_from_frontal(const Vec3& q) { return {-q(0) + q(1), kPi - q(1) + q(2)}; }

Vec3 frontal_from_hips(double stance_leg_angle, const HipAngles& hips) {
  const double pelvis = hips.stance + stance_leg_angle;
  return {stance_leg_angle, pelvis, hips.swing - kPi + pelvis};
}

Vec2 frontal_torques(double tau_stance_hip, double tau_swing_hip) {
  return {tau_stance_hip - tau_swing_hip, tau_swing_hip};
}

Vec3 frontal_generalized_forces(double tau_stance_hip, double tau_swing_hip) {
  return {-tau_stance_hip, tau_stance_hip - tau_swing_hip, tau_swing_hip};
}

Vec6 track_joints(const Vec6& q_ref, const Vec6& dq_ref, const Vec6& q, const Vec6& dq, const PdGains& gains) {
  Vec6 tau = gains.kp.cwiseProduct(q_ref - q) + gains.kd.cwiseProduct(dq_ref - dq);
  for (int i = 0; i < 6; ++i) tau(i) = std::clamp(tau(i), -gains.tau_max(i), gains.tau_max(i));
  return tau;
}

}  // namespace granular_biped
