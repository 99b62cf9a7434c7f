#include "granular_biped/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

// Hanging links point along (-sin q, -cos q); the trunk, pelvis and frontal
// swing leg along (sin q, cos q); the frontal stance leg along (-sin q, cos q).
LinkTerm down(int angle, double length) { return {angle, length, -1.0, -1.0}; }
LinkTerm up(int angle, double length) { return {angle, length, 1.0, 1.0}; }
LinkTerm up_mirrored(int angle, double length) { return {angle, length, -1.0, 1.0}; }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive");
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be non-negative");
}

template <int N>
Eigen::Matrix<double, N, 1> spd_solve(const Eigen::Matrix<double, N, N>& D, const Eigen::Matrix<double, N, 1>& b) {
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(D);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("inertia matrix is not positive definite");
  return llt.solve(b);
}

}  // namespace

void SagittalParams::set_rod_inertias() {
  I_b = m_b * (2.0 * l_b) * (2.0 * l_b) / 12.0;
  I_t = m_t * l_t * l_t / 12.0;
  I_c = m_c * l_c * l_c / 12.0;
  I_t_swing = m_t_swing * l_t * l_t / 12.0;
  I_c_swing = m_c_swing * l_c * l_c / 12.0;
}

void SagittalParams::validate() const {
  require_positive(m_b, "m_b");
  require_positive(m_t, "m_t");
  require_positive(m_c, "m_c");
  require_non_negative(m_t_swing, "m_t_swing");
  require_non_negative(m_c_swing, "m_c_swing");
  require_positive(l_t, "l_t");
  require_positive(l_c, "l_c");
  require_positive(l_b, "l_b");
  require_positive(a_1, "a_1");
  require_positive(a_2, "a_2");
  require_non_negative(I_b, "I_b");
  require_non_negative(I_t, "I_t");
  require_non_negative(I_c, "I_c");
  require_non_negative(I_t_swing, "I_t_swing");
  require_non_negative(I_c_swing, "I_c_swing");
  require_positive(g, "g");
  if (a_1 > l_t) throw DomainError("a_1 must not exceed l_t");
  if (a_2 > l_c) throw DomainError("a_2 must not exceed l_c");
}

void FrontalParams::validate() const {
  require_positive(m_b, "m_b");
  require_positive(m_1, "m_1");
  require_positive(m_2, "m_2");
  require_positive(l_1, "l_1");
  require_positive(d_1, "d_1");
  require_positive(d_2, "d_2");
  require_positive(b, "b");
  require_non_negative(I_b, "I_b");
  require_non_negative(I_1, "I_1");
  require_non_negative(I_2, "I_2");
  require_positive(g, "g");
  if (d_1 > l_1) throw DomainError("d_1 must not exceed l_1");
}

FrontalParams FrontalParams::from_sagittal(const SagittalParams& s, double hip_spacing) {
  FrontalParams f;
  f.m_b = s.m_b;
  f.m_1 = s.m_t + s.m_c;
  f.m_2 = s.m_t_swing + s.m_c_swing;
  f.l_1 = s.l_t + s.l_c;
  const double leg_com_from_hip = (s.m_t * s.a_1 + s.m_c * (s.l_t + s.a_2)) / f.m_1;
  f.d_1 = f.l_1 - leg_com_from_hip;
  f.d_2 = f.m_2 > 0.0 ? (s.m_t_swing * s.a_1 + s.m_c_swing * (s.l_t + s.a_2)) / f.m_2 : leg_com_from_hip;
  f.b = hip_spacing;
  // Roll inertia of the pelvis bar plus the trunk carried above it.
  f.I_b = s.I_b + s.m_b * (hip_spacing * hip_spacing / 12.0 + s.l_b * s.l_b);
  f.I_1 = f.m_1 * f.l_1 * f.l_1 / 12.0;
  f.I_2 = f.m_2 * f.l_1 * f.l_1 / 12.0;
  f.g = s.g;
  return f;
}

// ---------------------------------------------------------------------------

namespace {

PlanarLinkage make_sagittal_linkage(const SagittalParams& p) {
  using namespace sagittal;
  std::vector<LinkBody> bodies = {
      {"stance_thigh", p.m_t, p.I_t, kStanceThigh, {down(kStanceThigh, p.a_1)}},
      {"stance_calf", p.m_c, p.I_c, kStanceCalf, {down(kStanceThigh, p.l_t), down(kStanceCalf, p.a_2)}},
      {"swing_thigh", p.m_t_swing, p.I_t_swing, kSwingThigh, {down(kSwingThigh, p.a_1)}},
      {"swing_calf", p.m_c_swing, p.I_c_swing, kSwingCalf, {down(kSwingThigh, p.l_t), down(kSwingCalf, p.a_2)}},
      {"trunk", p.m_b, p.I_b, kTrunk, {up(kTrunk, p.l_b)}},
  };
  return PlanarLinkage(5, std::move(bodies), p.g);
}

PlanarLinkage make_frontal_linkage(const FrontalParams& p) {
  using namespace frontal;
  std::vector<LinkBody> bodies = {
      {"stance_leg", p.m_1, p.I_1, kStanceLeg, {up_mirrored(kStanceLeg, p.d_1)}},
      {"trunk", p.m_b, p.I_b, kPelvis, {up_mirrored(kStanceLeg, p.l_1), up(kPelvis, 0.5 * p.b)}},
      {"swing_leg", p.m_2, p.I_2, kSwingLeg, {up_mirrored(kStanceLeg, p.l_1), up(kPelvis, p.b), up(kSwingLeg, p.d_2)}},
  };
  return PlanarLinkage(3, std::move(bodies), p.g);
}

template <int N>
Equations<N> assemble_from(const PlanarLinkage& linkage, const Eigen::Matrix<double, N, 1>& q,
                           const Eigen::Matrix<double, N, 1>& dq) {
  const VectorXd qx = q;
  const VectorXd dqx = dq;
  Equations<N> eq;
  eq.D = linkage.mass_matrix(qx);
  eq.C = linkage.coriolis(qx, dqx);
  eq.G = linkage.gravity_vector(qx);
  return eq;
}

}  // namespace

SagittalModel::SagittalModel(const SagittalParams& params)
    : params_(params), linkage_(make_sagittal_linkage(params)) {
  using namespace sagittal;
  hip_ = {};
  stance_knee_ = {down(kStanceThigh, params.l_t)};
  stance_ankle_ = {down(kStanceThigh, params.l_t), down(kStanceCalf, params.l_c)};
  swing_ankle_ = {down(kSwingThigh, params.l_t), down(kSwingCalf, params.l_c)};
}

SagittalEquations SagittalModel::assemble(const SagittalState& s) const {
  return assemble_from<7>(linkage_, s.q, s.dq);
}

Vec7 SagittalModel::accel(const SagittalState& s, const Vec7& Q, const GrfSagittal& F) const {
  const auto eq = assemble(s);
  const Eigen::Matrix<double, 2, 7> J = linkage_.point_jacobian(s.q, stance_ankle_);
  const Vec7 rhs = Q + J.transpose() * Vec2(F.F_x, F.F_z) - eq.C * s.dq - eq.G;
  return spd_solve<7>(eq.D, rhs);
}

SagittalModel::Pinned SagittalModel::accel_pinned(const SagittalState& s, const Vec7& Q, const Vec2& pos_err,
                                                  const Vec2& vel_err, double baumgarte_omega) const {
  const auto eq = assemble(s);
  const Eigen::Matrix<double, 2, 7> J = linkage_.point_jacobian(s.q, stance_ankle_);
  const Vec2 jdqd = linkage_.point_jdot_qdot(s.q, s.dq, stance_ankle_);

  Eigen::Matrix<double, 9, 9> K = Eigen::Matrix<double, 9, 9>::Zero();
  K.topLeftCorner<7, 7>() = eq.D;
  K.topRightCorner<7, 2>() = -J.transpose();
  K.bottomLeftCorner<2, 7>() = J;
  Eigen::Matrix<double, 9, 1> rhs;
  rhs.head<7>() = Q - eq.C * s.dq - eq.G;
  const double w = baumgarte_omega;
  rhs.tail<2>() = -jdqd - 2.0 * w * vel_err - w * w * pos_err;

  Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> lu(K);
  if (!lu.isInvertible()) throw SingularMatrixError("pinned-contact system is singular");
  const Eigen::Matrix<double, 9, 1> sol = lu.solve(rhs);
  return {sol.head<7>(), {sol(7), sol(8)}};
}

double SagittalModel::energy(const SagittalState& s) const {
  return linkage_.kinetic_energy(s.q, s.dq) + linkage_.potential_energy(s.q);
}

FrontalModel::FrontalModel(const FrontalParams& params)
    : params_(params), linkage_(make_frontal_linkage(params)) {
  using namespace frontal;
  stance_hip_ = {up_mirrored(kStanceLeg, params.l_1)};
  swing_hip_ = {up_mirrored(kStanceLeg, params.l_1), up(kPelvis, params.b)};
  swing_foot_ = {up_mirrored(kStanceLeg, params.l_1), up(kPelvis, params.b), up(kSwingLeg, params.l_1)};
}

FrontalEquations FrontalModel::assemble(const FrontalState& s) const {
  return assemble_from<5>(linkage_, s.q, s.dq);
}

Vec5 FrontalModel::accel(const FrontalState& s, const Vec5& Q, const GrfFrontal& F) const {
  const auto eq = assemble(s);
  Vec5 rhs = Q - eq.C * s.dq - eq.G;
  rhs(frontal::kY) += F.F_y;
  rhs(frontal::kZ) += F.F_z;
  return spd_solve<5>(eq.D, rhs);
}

FrontalModel::Prescribed FrontalModel::accel_prescribed_z(const FrontalState& s, const Vec5& Q, double F_y,
                                                         double zdd, bool clamp_lateral) const {
  using namespace frontal;
  const auto eq = assemble(s);
  Vec5 rhs = Q - eq.C * s.dq - eq.G;
  if (!clamp_lateral) rhs(kY) += F_y;
  rhs -= eq.D.col(kZ) * zdd;

  Vec5 qdd = Vec5::Zero();
  qdd(kZ) = zdd;
  if (clamp_lateral) {
    const Eigen::Matrix3d Dr = eq.D.topLeftCorner<3, 3>();
    const Eigen::Vector3d r = rhs.head<3>();
    Eigen::LLT<Eigen::Matrix3d> llt(Dr);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("frontal inertia block is not positive definite");
    qdd.head<3>() = llt.solve(r);
    const double readout = (eq.D.row(kY) * qdd + eq.C.row(kY) * s.dq)(0) + eq.G(kY) - Q(kY);
    return {qdd, readout};
  }
  const Eigen::Matrix4d Dr = eq.D.topLeftCorner<4, 4>();
  const Eigen::Vector4d r = rhs.head<4>();
  Eigen::LLT<Eigen::Matrix4d> llt(Dr);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("frontal inertia block is not positive definite");
  qdd.head<4>() = llt.solve(r);
  return {qdd, F_y};
}

double FrontalModel::energy(const FrontalState& s) const {
  return linkage_.kinetic_energy(s.q, s.dq) + linkage_.potential_energy(s.q);
}

// ---------------------------------------------------------------------------

Eigen::Matrix<double, 7, 4> sagittal_actuation_matrix() {
  Eigen::Matrix<double, 7, 4> B = Eigen::Matrix<double, 7, 4>::Zero();
  B.topRows<4>().setIdentity();
  return B;
}

Eigen::Matrix<double, 5, 2> frontal_actuation_matrix() {
  Eigen::Matrix<double, 5, 2> B = Eigen::Matrix<double, 5, 2>::Zero();
  B(1, 0) = 1.0;
  B(2, 1) = 1.0;
  return B;
}

SagittalEquations assemble_sagittal(const SagittalParams& params, const SagittalState& state) {
  params.validate();
  return SagittalModel(params).assemble(state);
}

Vec7 sagittal_accel(const SagittalParams& params, const SagittalState& state, const Vec4& tau_s,
                    const GrfSagittal& F) {
  params.validate();
  return SagittalModel(params).accel(state, sagittal_actuation_matrix() * tau_s, F);
}

FrontalEquations assemble_frontal(const FrontalParams& params, const FrontalState& state) {
  params.validate();
  return FrontalModel(params).assemble(state);
}

Vec5 frontal_accel(const FrontalParams& params, const FrontalState& state, const Vec2& tau_f,
                   const GrfFrontal& F) {
  params.validate();
  return FrontalModel(params).accel(state, frontal_actuation_matrix() * tau_f, F);
}

}  // namespace granular_biped
