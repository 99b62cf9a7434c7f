#include "granular_biped/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

constexpr double kPi = std::numbers::pi;

using Mat2 = Eigen::Matrix2d;

Mat2 leg_jacobian(double l_t, double l_c, double thigh, double calf) {
  Mat2 J;
  J << -l_t * std::cos(thigh), -l_c * std::cos(calf), l_t * std::sin(thigh), l_c * std::sin(calf);
  return J;
}

Vec2 damped_solve(const Mat2& J, const Vec2& v) {
  const Mat2 A = J.transpose() * J + 1e-6 * Mat2::Identity();
  return A.ldlt().solve(J.transpose() * v);
}

Vec2 clamp_reach(Vec2 target, double l_t, double l_c) {
  const double outer = 0.995 * (l_t + l_c);
  const double inner = std::abs(l_t - l_c) + 0.05 * (l_t + l_c);
  const double r = target.norm();
  if (r > outer) target *= outer / r;
  if (r < inner) target = r > 0.0 ? Vec2(target * inner / r) : Vec2(0.0, -inner);
  return target;
}

void swap_legs(Vec7& v) {
  using namespace sagittal;
  std::swap(v(kStanceThigh), v(kSwingThigh));
  std::swap(v(kStanceCalf), v(kSwingCalf));
}

/// Removes the velocity component violating A dq = 0 in the kinetic-energy metric.
template <int N, int M>
Eigen::Matrix<double, N, 1> project_velocity(const Eigen::Matrix<double, N, N>& D,
                                            const Eigen::Matrix<double, M, N>& A,
                                            const Eigen::Matrix<double, N, 1>& dq) {
  const Eigen::Matrix<double, N, M> DinvAt = D.llt().solve(A.transpose());
  const Eigen::Matrix<double, M, M> S = A * DinvAt;
  return dq - DinvAt * S.fullPivLu().solve(A * dq);
}

bool all_finite_below(const Eigen::VectorXd& v, double limit) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || std::abs(v(i)) > limit) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Integrator i) { return i == Integrator::Rk4 ? "rk4" : "semi_implicit_euler"; }
std::string to_string(TerrainMode m) { return m == TerrainMode::Rigid ? "rigid" : "granular"; }

Integrator parse_integrator(const std::string& s) {
  if (s == "rk4") return Integrator::Rk4;
  if (s == "semi_implicit_euler" || s == "euler") return Integrator::SemiImplicitEuler;
  throw ConfigError("unknown integrator '" + s + "'");
}

TerrainMode parse_terrain_mode(const std::string& s) {
  if (s == "granular" || s == "sand") return TerrainMode::Granular;
  if (s == "rigid") return TerrainMode::Rigid;
  throw ConfigError("unknown terrain mode '" + s + "'");
}

void RobotConfig::validate() const {
  sagittal.validate();
  if (!(hip_spacing > 0.0)) throw DomainError("hip_spacing must be positive");
  if (!(foot_radius > 0.0)) throw DomainError("foot_radius must be positive");
  frontal().validate();
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw DomainError("duration must be positive");
  if (decimation < 1) throw DomainError("decimation must be at least 1");
  if (!(divergence_limit > 0.0)) throw DomainError("divergence_limit must be positive");
  if (!(init_noise >= 0.0)) throw DomainError("init_noise must be non-negative");
  gait.validate();
  if (duration < gait.cycle_period) throw DomainError("duration must cover at least one gait cycle");
  terrain.validate();
  robot.validate();
  const auto& p = robot.sagittal;
  if (p.m_t_swing != p.m_t || p.m_c_swing != p.m_c || p.I_t_swing != p.I_t || p.I_c_swing != p.I_c) {
    throw DomainError("walking simulation requires identical legs");
  }
  const double reach = p.l_t + p.l_c;
  const double leg = controller.hip_height - robot.foot_radius;
  if (!(leg > 0.0 && leg < reach)) throw DomainError("controller hip_height must leave the ankle inside the leg reach");
}

ContactEvent detect_touchdown(double prev_height, double height, double sand_level) {
  if (prev_height > sand_level && height <= sand_level) return ContactEvent::Touchdown;
  if (prev_height <= sand_level && height > sand_level) return ContactEvent::Liftoff;
  return ContactEvent::None;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const SimConfig& config) : Simulator(config, initial_state(config)) {}

Simulator::Simulator(const SimConfig& config, const WalkerState& initial)
    : config_(config),
      sagittal_((config.validate(), config.robot.sagittal)),
      frontal_(config.robot.frontal()),
      foot_(FootShape::semi_cylinder(config.robot.foot_radius)),
      state_(initial) {}

WalkerState Simulator::initial_state(const SimConfig& config) {
  using namespace sagittal;
  config.validate();
  const auto& p = config.robot.sagittal;
  const double R = config.robot.foot_radius;
  const double L0 = config.controller.hip_height - R;
  const double level = config.terrain.sand_level;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double v = config.gait.v_target * (1.0 + config.init_noise * noise(rng));

  const double placement = std::min(0.5 * v * config.gait.stance_duration(), 0.25 * L0);

  WalkerState s;
  // Feet symmetric about the CoM, which sits behind the hip when the knees
  // bend backwards.
  const SagittalModel model(p);
  double offset = 0.0;
  LegAngles st, sw;
  Vec2 st_target, sw_target;
  for (int i = 0; i < 8; ++i) {
    const double xs = offset + placement, xw = offset - placement;
    st_target = {xs, -std::sqrt(L0 * L0 - xs * xs)};
    sw_target = {xw, -std::sqrt(L0 * L0 - xw * xw)};
    st = leg_ik(p.l_t, p.l_c, st_target);
    sw = leg_ik(p.l_t, p.l_c, sw_target);
    s.sagittal.q << st.thigh, st.calf, sw.thigh, sw.calf, 0.0, 0.0, 0.0;
    offset = model.linkage().com(s.sagittal.q).x();
  }
  const double h = -st_target.y();
  s.sagittal.q(kZ) = level + R + h;

  // Hip velocity perpendicular to the stance leg so the ankle starts at rest.
  const Vec2 v_hip(v, v * st_target.x() / h);
  const Vec2 dst = leg_jacobian(p.l_t, p.l_c, st.thigh, st.calf).fullPivLu().solve(-v_hip);
  s.sagittal.dq << dst(0), dst(1), 0.0, 0.0, 0.0, v_hip.x(), v_hip.y();

  // Level pelvis, vertical swing leg, stance leg leaning so that the CoM is
  // above the foot.
  s.frontal.q << 0.0, kPi / 2.0, kPi, 0.0, 0.0;
  {
    const FrontalModel fm(config.robot.frontal());
    double lo = -0.5, hi = 0.5;
    for (int i = 0; i < 60; ++i) {
      s.frontal.q(frontal::kStanceLeg) = 0.5 * (lo + hi);
      (fm.linkage().com(s.frontal.q).x() > 0.0 ? lo : hi) = s.frontal.q(frontal::kStanceLeg);
    }
  }
  s.frontal.dq.setZero();

  s.stance = Leg::Left;
  s.ankle0 = {st_target.x(), level + R};
  s.c0 = {st_target.x(), level};
  s.theta_r0 = st.calf;
  s.swing_start = sw_target;
  s.prev_swing_height = level;
  s.step_speed = v;
  s.stance_length0 = L0;
  return s;
}

void Simulator::actuation_state(Vec6& q_a, Vec6& dq_a) const {
  const Leg st = state_.stance;
  const Leg sw = other(st);
  q_a = actuation_from_sagittal(state_.sagittal.q.head<5>(), st);
  dq_a = actuation_from_sagittal(state_.sagittal.dq.head<5>(), st);
  const HipAngles hips = hips_from_frontal(state_.frontal.q.head<3>());
  const HipAngles rates = {-state_.frontal.dq(0) + state_.frontal.dq(1), -state_.frontal.dq(1) + state_.frontal.dq(2)};
  q_a(joint::hip(st)) = hips.stance;
  q_a(joint::hip(sw)) = hips.swing;
  dq_a(joint::hip(st)) = rates.stance;
  dq_a(joint::hip(sw)) = rates.swing;
}

double Simulator::swing_foot_height(const WalkerState& s) const {
  return sagittal_.linkage().point(s.sagittal.q, sagittal_.swing_ankle()).y() - config_.robot.foot_radius;
}

ContactReadout Simulator::contact(const WalkerState& s) const {
  const auto& lk = sagittal_.linkage();
  const Vec2 ankle = lk.point(s.sagittal.q, sagittal_.stance_ankle());
  const Vec2 vel = lk.point_jacobian(s.sagittal.q, sagittal_.stance_ankle()) * s.sagittal.dq;
  const Vec2 c = ankle - Vec2(0.0, config_.robot.foot_radius);

  ContactReadout r;
  if (config_.terrain_mode == TerrainMode::Rigid) return r;
  r.x_s = c.x() - s.c0.x();
  r.z_s = s.c0.y() - c.y();
  r.y_s = s.frontal.q(frontal::kY);
  r.v_s = {vel.x(), -vel.y()};
  if (r.z_s <= 0.0) return r;

  IntrusionKinematics kin;
  kin.z_s = r.z_s;
  kin.v_s = r.v_s;
  kin.v_f = {s.frontal.dq(frontal::kY), -vel.y()};
  kin.y_s = r.y_s;
  const auto& t = config_.terrain;
  r.sagittal = t.element_resolved ? sagittal_forces_resolved(t, config_.robot.foot_radius, kin)
                                  : sagittal_forces(t, kin);
  const double mag = lateral_force(t, kin);
  r.F_y = r.y_s > 0.0 ? -mag : (r.y_s < 0.0 ? mag : 0.0);
  return r;
}

Simulator::Accel Simulator::evaluate(const WalkerState& s, const Vec6& tau_a) const {
  using namespace sagittal;
  const Leg st = s.stance;
  Vec7 Q_s = Vec7::Zero();
  Q_s.head<5>() = sagittal_generalized_forces(tau_a, st);
  Vec5 Q_f = Vec5::Zero();
  Q_f.head<3>() = frontal_generalized_forces(tau_a(joint::hip(st)), tau_a(joint::hip(other(st))));

  Accel a;
  a.contact = contact(s);
  const auto& lk = sagittal_.linkage();
  if (config_.terrain_mode == TerrainMode::Rigid) {
    const Vec2 ankle = lk.point(s.sagittal.q, sagittal_.stance_ankle());
    const Vec2 vel = lk.point_jacobian(s.sagittal.q, sagittal_.stance_ankle()) * s.sagittal.dq;
    const auto pinned = sagittal_.accel_pinned(s.sagittal, Q_s, ankle - s.ankle0, vel, config_.baumgarte_omega);
    a.qdd_s = pinned.qdd;
    a.contact.sagittal = pinned.F;
    const auto fr = frontal_.accel_prescribed_z(s.frontal, Q_f, 0.0, 0.0, true);
    a.qdd_f = fr.qdd;
    a.contact.F_y = fr.F_y;
    return a;
  }

  // Rigid-plastic contact resolved on the end-of-step velocity: the foot
  // sticks when the force stopping it lies inside the yield locus, otherwise
  // the resistive force is the one whose intrusion direction matches the
  // resulting velocity.
  const Eigen::Matrix<double, 2, 7> J = lk.point_jacobian(s.sagittal.q, sagittal_.stance_ankle());
  const Vec2 jdqd = lk.point_jdot_qdot(s.sagittal.q, s.sagittal.dq, sagittal_.stance_ankle());
  const auto eq = sagittal_.assemble(s.sagittal);
  const Eigen::LLT<Mat7> llt(eq.D);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("sagittal inertia matrix is not positive definite");
  const Vec7 a_free = llt.solve(Q_s - eq.C * s.sagittal.dq - eq.G);
  const Eigen::Matrix<double, 7, 2> DinvJt = llt.solve(J.transpose());
  a.qdd_s = a_free;
  a.contact.sagittal = {};
  if (a.contact.z_s > 0.0) {
    const double dt = config_.dt;
    const Eigen::Matrix2d A = J * DinvJt;
    const Vec2 v_free = J * s.sagittal.dq + dt * (J * a_free + jdqd);
    const Vec2 F_stop = -A.ldlt().solve(v_free) / dt;
    const std::vector<Vec2> locus = yield_locus(a.contact.z_s);
    Vec2 F;
    if (inside_locus(locus, F_stop)) {
      F = F_stop;
      a.contact.stuck = true;
    } else {
      F = slip_force(a.contact.z_s, v_free, A * dt);
    }
    a.contact.sagittal = {F.x(), F.y()};
    a.qdd_s = a_free + DinvJt * F;
  }
  const double zdd = (J * a.qdd_s + jdqd).y();
  a.qdd_f = frontal_.accel_prescribed_z(s.frontal, Q_f, a.contact.F_y, zdd, false).qdd;
  return a;
}

std::vector<Vec2> Simulator::yield_locus(double z_s) const {
  const auto& t = config_.terrain;
  if (!t.element_resolved) return sagittal_yield_locus(t, z_s);
  std::vector<Vec2> locus;
  IntrusionKinematics kin;
  kin.z_s = z_s;
  constexpr int kDirections = 72;
  for (int k = 0; k < kDirections; ++k) {
    const double g = 2.0 * kPi * k / kDirections;
    kin.v_s = {std::cos(g), std::sin(g)};
    const GrfSagittal f = sagittal_forces_resolved(t, config_.robot.foot_radius, kin);
    locus.emplace_back(f.F_x, f.F_z);
  }
  return locus;
}

Vec2 Simulator::slip_force(double z_s, const Vec2& v_free, const Eigen::Matrix2d& A_dt) const {
  IntrusionKinematics kin;
  kin.z_s = z_s;
  const auto& t = config_.terrain;
  const auto force = [&](double g) {
    kin.v_s = {std::cos(g), std::sin(g)};
    const GrfSagittal f = t.element_resolved ? sagittal_forces_resolved(t, config_.robot.foot_radius, kin)
                                             : sagittal_forces(t, kin);
    return Vec2(f.F_x, f.F_z);
  };
  // Misalignment between the trial direction and the velocity it produces,
  // both in the sinkage-positive-down frame.
  const auto residual = [&](double g, double* along) {
    const Vec2 w = v_free + A_dt * force(g);
    const Vec2 v(w.x(), -w.y());
    const Vec2 u(std::cos(g), std::sin(g));
    if (along) *along = u.dot(v);
    return u.x() * v.y() - u.y() * v.x();
  };

  constexpr int kGrid = 144;
  double best_g = std::atan2(-v_free.y(), v_free.x());
  double best_speed = std::numeric_limits<double>::infinity();
  double g0 = 0.0, along0 = 0.0;
  double r0 = residual(g0, &along0);
  for (int k = 1; k <= kGrid; ++k) {
    const double g1 = 2.0 * kPi * k / kGrid;
    double along1 = 0.0;
    const double r1 = residual(g1, &along1);
    if ((r0 <= 0.0) != (r1 <= 0.0) && (along0 > 0.0 || along1 > 0.0)) {
      double lo = g0, hi = g1, r_lo = r0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = residual(mid, nullptr);
        if ((rm <= 0.0) == (r_lo <= 0.0)) {
          lo = mid;
          r_lo = rm;
        } else {
          hi = mid;
        }
      }
      const double g = 0.5 * (lo + hi);
      double along = 0.0;
      residual(g, &along);
      if (along > 0.0 && along < best_speed) {
        best_speed = along;
        best_g = g;
      }
    }
    g0 = g1;
    r0 = r1;
    along0 = along1;
  }
  return force(best_g);
}

Vec6 Simulator::control() const {
  using namespace sagittal;
  const auto& p = config_.robot.sagittal;
  const auto& c = config_.controller;
  const auto& s = state_;
  const Leg st = s.stance;
  const Leg sw = other(st);

  Vec6 q_a, dq_a;
  actuation_state(q_a, dq_a);
  Vec6 q_ref = q_a, dq_ref = dq_a;
  PdGains gains;
  gains.tau_max.setConstant(c.tau_max);

  const Vec7& q = s.sagittal.q;
  const Vec7& dq = s.sagittal.dq;

  // Stance hip pitch holds the trunk; the stance knee extends the leg from the
  // touchdown length to its nominal length.
  q_ref(joint::thigh(st)) = q(kStanceThigh) - c.trunk_pitch;
  dq_ref(joint::thigh(st)) = dq(kStanceThigh);
  const double level = config_.terrain.sand_level;
  const double goal = c.hip_height - config_.robot.foot_radius;
  const double T_st = config_.gait.stance_duration();
  const double ext = std::clamp((s.t - s.stance_start) / (c.extension_time * T_st), 0.0, 1.0);
  const double length = s.stance_length0 + cycloid_swing(ext, goal - s.stance_length0, 0.0).x();
  const double length_rate =
      ext < 1.0 ? cycloid_swing_rate(ext, goal - s.stance_length0, 0.0).x() / (c.extension_time * T_st) : 0.0;
  const LegAngles straight = leg_ik(p.l_t, p.l_c, {0.0, -length});
  q_ref(joint::knee(st)) = straight.calf - straight.thigh;
  // d(knee)/dL for a straight-down leg.
  dq_ref(joint::knee(st)) = -length_rate * length / (p.l_t * p.l_c * std::sin(straight.calf - straight.thigh));
  gains.kp(joint::thigh(st)) = c.kp_trunk;
  gains.kd(joint::thigh(st)) = c.kd_trunk;
  gains.kp(joint::knee(st)) = c.kp_stance_knee;
  gains.kd(joint::knee(st)) = c.kd_stance_knee;

  // Swing ankle follows a hip-relative cycloid to a speed-dependent placement.
  const double T_sw = config_.gait.swing_duration();
  const double phase = std::clamp((s.t - s.stance_start) / T_sw, 0.0, 1.0);
  // Mean hip speed of the current step once it is long enough to average.
  const double elapsed = s.t - s.stance_start;
  const double v_hip = elapsed > 0.25 * T_sw ? (q(kX) - s.stance_start_x) / elapsed : s.step_speed;
  const double R = config_.robot.foot_radius;
  const double com_offset = sagittal_.linkage().com(q).x() - q(kX);
  const Vec2 end(com_offset + 0.5 * v_hip * config_.gait.stance_duration() +
                     c.placement_gain * (v_hip - config_.gait.v_target) + s.placement_bias,
                 level + R - c.push_depth - q(kZ));
  const Vec2 delta = end - s.swing_start;
  const Vec2 base = cycloid_swing(phase, delta.x(), config_.gait.swing_height);
  const Vec2 lift = cycloid_swing(phase, delta.y(), 0.0);
  const Vec2 target = clamp_reach(s.swing_start + Vec2(base.x(), lift.x() + base.y()), p.l_t, p.l_c);
  const Vec2 base_rate = cycloid_swing_rate(phase, delta.x(), config_.gait.swing_height) / T_sw;
  const Vec2 lift_rate = cycloid_swing_rate(phase, delta.y(), 0.0) / T_sw;
  const Vec2 target_rate(base_rate.x(), lift_rate.x() + base_rate.y());

  const LegAngles ik = leg_ik(p.l_t, p.l_c, target);
  const Vec2 rates = damped_solve(leg_jacobian(p.l_t, p.l_c, ik.thigh, ik.calf), target_rate);
  q_ref(joint::thigh(sw)) = ik.thigh - q(kTrunk);
  dq_ref(joint::thigh(sw)) = rates(0) - dq(kTrunk);
  q_ref(joint::knee(sw)) = ik.calf - ik.thigh;
  dq_ref(joint::knee(sw)) = rates(1) - rates(0);
  gains.kp(joint::thigh(sw)) = c.kp_swing_thigh;
  gains.kd(joint::thigh(sw)) = c.kd_swing_thigh;
  gains.kp(joint::knee(sw)) = c.kp_swing_knee;
  gains.kd(joint::knee(sw)) = c.kd_swing_knee;

  // Frontal hips keep the pelvis level; the swing leg moves from its liftoff
  // angle towards the lateral capture point, which is frozen late in swing.
  const Vec5& qf = s.frontal.q;
  const Vec5& dqf = s.frontal.dq;
  const double roll_end = roll_towards(s, s.lateral_latched ? s.lateral_target : capture_target(s));
  const double blend = cycloid_swing(phase, 1.0, 0.0).x();
  const double blend_rate = cycloid_swing_rate(phase, 1.0, 0.0).x() / T_sw;
  const double roll_ref = s.swing_roll_start + blend * (roll_end - s.swing_roll_start);
  const double roll_rate = blend_rate * (roll_end - s.swing_roll_start);
  q_ref(joint::hip(st)) = -qf(frontal::kStanceLeg) + kPi / 2.0;
  dq_ref(joint::hip(st)) = -dqf(frontal::kStanceLeg);
  q_ref(joint::hip(sw)) = kPi - qf(frontal::kPelvis) + roll_ref;
  dq_ref(joint::hip(sw)) = -dqf(frontal::kPelvis) + roll_rate;
  gains.kp(joint::hip(st)) = c.kp_pelvis;
  gains.kd(joint::hip(st)) = c.kd_pelvis;
  gains.kp(joint::hip(sw)) = c.kp_swing_roll;
  gains.kd(joint::hip(sw)) = c.kd_swing_roll;

  return track_joints(q_ref, dq_ref, q_a, dq_a, gains);
}

double Simulator::capture_target(const WalkerState& s) const {
  const auto& c = config_.controller;
  const auto& flk = frontal_.linkage();
  return flk.com(s.frontal.q).x() + c.lateral_capture_gain * flk.com_velocity(s.frontal.q, s.frontal.dq).x() +
         c.lateral_offset;
}

double Simulator::roll_towards(const WalkerState& s, double y) const {
  const double l1 = frontal_.params().l_1;
  const double dy = std::clamp(y - frontal_.linkage().point(s.frontal.q, frontal_.swing_hip()).x(), -0.5 * l1, 0.5 * l1);
  return kPi - std::asin(dy / l1);
}

void Simulator::integrate(const Vec6& tau_a) {
  const double dt = config_.dt;
  if (config_.integrator == Integrator::SemiImplicitEuler) {
    const Accel a = evaluate(state_, tau_a);
    state_.sagittal.dq += dt * a.qdd_s;
    state_.sagittal.q += dt * state_.sagittal.dq;
    state_.frontal.dq += dt * a.qdd_f;
    state_.frontal.q += dt * state_.frontal.dq;
  } else {
    const WalkerState s0 = state_;
    const auto advance = [&](const Accel& k, const WalkerState& from, double h) {
      WalkerState s = s0;
      s.sagittal.q += h * from.sagittal.dq;
      s.sagittal.dq += h * k.qdd_s;
      s.frontal.q += h * from.frontal.dq;
      s.frontal.dq += h * k.qdd_f;
      return s;
    };
    const Accel k1 = evaluate(s0, tau_a);
    const WalkerState s2 = advance(k1, s0, 0.5 * dt);
    const Accel k2 = evaluate(s2, tau_a);
    const WalkerState s3 = advance(k2, s2, 0.5 * dt);
    const Accel k3 = evaluate(s3, tau_a);
    const WalkerState s4 = advance(k3, s3, dt);
    const Accel k4 = evaluate(s4, tau_a);
    state_.sagittal.q += dt / 6.0 * (s0.sagittal.dq + 2.0 * s2.sagittal.dq + 2.0 * s3.sagittal.dq + s4.sagittal.dq);
    state_.sagittal.dq += dt / 6.0 * (k1.qdd_s + 2.0 * k2.qdd_s + 2.0 * k3.qdd_s + k4.qdd_s);
    state_.frontal.q += dt / 6.0 * (s0.frontal.dq + 2.0 * s2.frontal.dq + 2.0 * s3.frontal.dq + s4.frontal.dq);
    state_.frontal.dq += dt / 6.0 * (k1.qdd_f + 2.0 * k2.qdd_f + 2.0 * k3.qdd_f + k4.qdd_f);
  }
  state_.t += dt;

  // The frontal contact height is owned by the sagittal plane.
  const auto& lk = sagittal_.linkage();
  if (config_.terrain_mode == TerrainMode::Rigid) {
    state_.frontal.q(frontal::kY) = 0.0;
    state_.frontal.dq(frontal::kY) = 0.0;
    state_.frontal.q(frontal::kZ) = 0.0;
    state_.frontal.dq(frontal::kZ) = 0.0;
  } else {
    const Vec2 ankle = lk.point(state_.sagittal.q, sagittal_.stance_ankle());
    const Vec2 vel = lk.point_jacobian(state_.sagittal.q, sagittal_.stance_ankle()) * state_.sagittal.dq;
    state_.frontal.q(frontal::kZ) = ankle.y() - config_.robot.foot_radius - state_.c0.y();
    state_.frontal.dq(frontal::kZ) = vel.y();
  }
}

void Simulator::touchdown() {
  using namespace sagittal;
  auto& s = state_;
  const auto& lk = sagittal_.linkage();
  const double R = config_.robot.foot_radius;

  // Frontal points before relabelling, in the outgoing stance frame.
  const Vec5 qf = s.frontal.q, dqf = s.frontal.dq;
  const auto& flk = frontal_.linkage();
  const Vec2 foot_vel = flk.point_jacobian(qf, frontal_.swing_foot()) * dqf;

  swap_legs(s.sagittal.q);
  swap_legs(s.sagittal.dq);
  s.stance = other(s.stance);
  ++s.stance_index;
  const auto& c = config_.controller;
  if (s.t > s.stance_start) {
    s.step_speed = (s.sagittal.q(kX) - s.stance_start_x) / (s.t - s.stance_start);
    s.placement_bias = std::clamp(s.placement_bias + c.placement_integral_gain * (s.step_speed - config_.gait.v_target),
                                  -c.placement_bias_limit, c.placement_bias_limit);
  }
  s.stance_start = s.t;
  s.stance_start_x = s.sagittal.q(kX);
  const auto& p = config_.robot.sagittal;
  const double length0 = (lk.point(s.sagittal.q, sagittal_.stance_ankle()) - s.sagittal.q.segment<2>(kX)).norm();
  s.stance_length0 = clamp_reach(Vec2(0.0, -length0), p.l_t, p.l_c).norm();

  const Vec2 ankle = lk.point(s.sagittal.q, sagittal_.stance_ankle());
  s.ankle0 = ankle;
  s.c0 = ankle - Vec2(0.0, R);
  s.theta_r0 = orientation_angle(foot_, lowest_point(foot_, s.sagittal.q(kStanceCalf)));
  s.swing_start = lk.point(s.sagittal.q, sagittal_.swing_ankle()) - Vec2(s.sagittal.q(kX), s.sagittal.q(kZ));

  if (config_.terrain_mode == TerrainMode::Rigid) {
    const Eigen::Matrix<double, 2, 7> J = lk.point_jacobian(s.sagittal.q, sagittal_.stance_ankle());
    s.sagittal.dq = project_velocity<7, 2>(sagittal_.assemble(s.sagittal).D, J, s.sagittal.dq);
  }

  // Mirror the frontal plane about the new stance leg.
  namespace f = frontal;
  s.frontal.q(f::kStanceLeg) = std::remainder(qf(f::kSwingLeg) - kPi, 2.0 * kPi);
  s.frontal.q(f::kPelvis) = kPi - qf(f::kPelvis);
  s.frontal.q(f::kSwingLeg) = std::remainder(qf(f::kStanceLeg), 2.0 * kPi) + kPi;
  s.frontal.q(f::kY) = 0.0;
  s.frontal.q(f::kZ) = 0.0;
  s.frontal.dq(f::kStanceLeg) = dqf(f::kSwingLeg);
  s.frontal.dq(f::kPelvis) = -dqf(f::kPelvis);
  s.frontal.dq(f::kSwingLeg) = dqf(f::kStanceLeg);
  s.frontal.dq(f::kY) = -foot_vel.x();
  if (config_.terrain_mode == TerrainMode::Rigid) {
    s.frontal.dq(f::kZ) = foot_vel.y();
    Eigen::Matrix<double, 2, 5> A = Eigen::Matrix<double, 2, 5>::Zero();
    A(0, f::kY) = 1.0;
    A(1, f::kZ) = 1.0;
    s.frontal.dq = project_velocity<5, 2>(frontal_.assemble(s.frontal).D, A, s.frontal.dq);
  } else {
    s.frontal.dq(f::kZ) = (lk.point_jacobian(s.sagittal.q, sagittal_.stance_ankle()) * s.sagittal.dq).y();
  }
  s.swing_roll_start = s.frontal.q(f::kSwingLeg);
  s.lateral_latched = false;
  s.prev_swing_height = swing_foot_height(s);
}

void Simulator::check_divergence() const {
  const double lim = config_.divergence_limit;
  if (!all_finite_below(state_.sagittal.q, lim) || !all_finite_below(state_.sagittal.dq, lim) ||
      !all_finite_below(state_.frontal.q, lim) || !all_finite_below(state_.frontal.dq, lim)) {
    throw DivergenceError("state left the admissible range", state_.t);
  }
  if (state_.sagittal.q(sagittal::kZ) < config_.terrain.sand_level) {
    throw DivergenceError("hip dropped below the surface", state_.t);
  }
}

ContactEvent Simulator::step(const Vec6& tau_a) {
  integrate(tau_a);
  check_divergence();

  const double h = swing_foot_height(state_);
  const double phase = (state_.t - state_.stance_start) / config_.gait.swing_duration();
  ContactEvent ev = detect_touchdown(state_.prev_swing_height, h, config_.terrain.sand_level);
  state_.prev_swing_height = h;
  if (!state_.lateral_latched && phase >= config_.controller.lateral_latch_phase) {
    state_.lateral_target = capture_target(state_);
    state_.lateral_latched = true;
  }
  if (ev == ContactEvent::Touchdown && phase >= config_.controller.min_touchdown_phase) {
    touchdown();
    return ContactEvent::Touchdown;
  }
  return ContactEvent::None;
}

SimRecord Simulator::record(const Vec6& tau_a) const {
  using namespace sagittal;
  const auto& s = state_;
  const Accel a = evaluate(s, tau_a);
  SimRecord r;
  r.t = s.t;
  r.stance_leg = s.stance == Leg::Left ? 0 : 1;
  r.stance_index = s.stance_index;
  r.stance_phase = (s.t - s.stance_start) / config_.gait.stance_duration();
  r.q_s = s.sagittal.q;
  r.dq_s = s.sagittal.dq;
  r.q_f = s.frontal.q;
  r.dq_f = s.frontal.dq;
  actuation_state(r.q_a, r.dq_a);
  r.tau_a = tau_a;
  r.F_x = a.contact.sagittal.F_x;
  r.F_z = a.contact.sagittal.F_z;
  r.F_y = a.contact.F_y;
  r.x_s = a.contact.x_s;
  r.y_s = a.contact.y_s;
  r.z_s = a.contact.z_s;
  r.stuck = a.contact.stuck ? 1 : 0;

  const double pitch = s.sagittal.q(kStanceCalf);
  r.theta_r = orientation_angle(foot_, lowest_point(foot_, pitch));
  r.delta_theta_r = rolling_angle(s.theta_r0, r.theta_r);
  if (const auto g = velocity_angle(a.contact.v_s.x(), a.contact.v_s.y(), config_.terrain.eps_v)) {
    r.gamma = *g;
    r.gamma_defined = 1;
  }
  try {
    r.R_eff = std::min(effective_radius(a.contact.v_s, s.sagittal.dq(kStanceCalf)), config_.r_eff_cap);
  } catch (const NoRotationError&) {
    r.R_eff = config_.r_eff_cap;
  }

  const Leg st = s.stance;
  const Vec5 Q_s = sagittal_generalized_forces(tau_a, st);
  const Vec3 Q_f = frontal_generalized_forces(tau_a(joint::hip(st)), tau_a(joint::hip(other(st))));
  r.power_sagittal = Q_s.dot(s.sagittal.dq.head<5>());
  r.power_frontal = Q_f.dot(s.frontal.dq.head<3>());
  r.power = tau_a.dot(r.dq_a);

  const auto& lk = sagittal_.linkage();
  const Vec2 com = lk.com(s.sagittal.q);
  const Vec2 vcom = lk.com_velocity(s.sagittal.q, s.sagittal.dq);
  r.com_x = com.x();
  r.com_z = com.y();
  r.com_vx = vcom.x();
  r.com_vz = vcom.y();
  return r;
}

Trajectory run(const SimConfig& config) {
  Simulator sim(config);
  const long steps = std::lround(config.duration / config.dt);
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(steps / config.decimation + 1));
  for (long i = 0; i < steps; ++i) {
    const Vec6 tau = sim.control();
    sim.step(tau);
    if ((i + 1) % config.decimation == 0) traj.push_back(sim.record(tau));
  }
  return traj;
}

}  // namespace granular_biped
