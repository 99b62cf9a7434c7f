// Acceptance checks: one pass/fail line per criterion, non-zero exit on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>
#include <fmt/core.h>

#include "granular_biped/dynamics.hpp"
#include "granular_biped/metrics.hpp"
#include "granular_biped/rolling.hpp"
#include "granular_biped/sim.hpp"
#include "granular_biped/terrain.hpp"
#include "granular_biped/trajectory_io.hpp"
#include "oracles.hpp"

using namespace granular_biped;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

IntrusionKinematics kin_at(double z, Vec2 v_s, double y = 0.0, Vec2 v_f = Vec2(0.0, 0.1)) {
  IntrusionKinematics k;
  k.z_s = z;
  k.v_s = v_s;
  k.y_s = y;
  k.v_f = v_f;
  return k;
}

template <int N>
Eigen::Matrix<double, N, N> dD_dt(const PlanarLinkage& lk, const Eigen::Matrix<double, N, 1>& q,
                                  const Eigen::Matrix<double, N, 1>& dq, double h) {
  const Eigen::VectorXd qp = q + h * dq, qm = q - h * dq;
  return (lk.mass_matrix(qp) - lk.mass_matrix(qm)) / (2.0 * h);
}

double weight_of(const SimConfig& c) { return c.robot.sagittal.total_mass() * c.robot.sagittal.g; }

Outcome row_consistency() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const SagittalParams p = oracle::random_sagittal(rng, true, false);
    const SagittalState s{oracle::uniform<7>(rng, -1.2, 1.2), oracle::uniform<7>(rng, -3.0, 3.0)};
    const Vec7 ddq = oracle::uniform<7>(rng, -10.0, 10.0);
    const auto eq = assemble_sagittal(p, s);
    const Vec7 lhs = eq.D * ddq + eq.C * s.dq + eq.G;
    worst = std::max(worst, rel_err(lhs(5), oracle::sagittal_row_x(p, s.q, s.dq, ddq)));
    worst = std::max(worst, rel_err(lhs(6), oracle::sagittal_row_z(p, s.q, s.dq, ddq)));

    const FrontalParams f = oracle::random_frontal(rng, k % 2 == 0);
    FrontalState sf{oracle::uniform<5>(rng, -1.5, 1.5), oracle::uniform<5>(rng, -3.0, 3.0)};
    sf.q(1) += oracle::kPi / 2;
    sf.q(2) += oracle::kPi;
    const Vec5 ddqf = oracle::uniform<5>(rng, -10.0, 10.0);
    const auto ef = assemble_frontal(f, sf);
    const double row = (ef.D * ddqf + ef.C * sf.dq + ef.G)(3);
    worst = std::max(worst, rel_err(row, oracle::frontal_row_y(f, sf.q, sf.dq, ddqf)));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-9 && t < 5.0, fmt::format("max relative error {:.2e}, {:.2f} s", worst, t)};
}

Outcome structural_properties() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(102);
  double min_eig = std::numeric_limits<double>::infinity(), asym = 0.0, skew = 0.0, grad = 0.0;
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    SagittalModel m(oracle::random_sagittal(rng, false, true));
    const Vec7 q = oracle::uniform<7>(rng, -1.2, 1.2), dq = oracle::uniform<7>(rng, -3.0, 3.0);
    const auto eq = m.assemble({q, dq});
    asym = std::max(asym, (eq.D - eq.D.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat7>(eq.D).eigenvalues().minCoeff());
    const Mat7 N = dD_dt<7>(m.linkage(), q, dq, h) - 2.0 * eq.C;
    skew = std::max(skew, (N + N.transpose()).cwiseAbs().maxCoeff());
    for (int i = 0; i < 7; ++i) {
      Eigen::VectorXd qp = q, qm = q;
      qp(i) += h;
      qm(i) -= h;
      const double g = (m.linkage().potential_energy(qp) - m.linkage().potential_energy(qm)) / (2.0 * h);
      grad = std::max(grad, std::abs(eq.G(i) - g));
    }

    FrontalModel f(oracle::random_frontal(rng, false));
    const Vec5 qf = oracle::uniform<5>(rng, -3.0, 3.0), dqf = oracle::uniform<5>(rng, -3.0, 3.0);
    const auto ef = f.assemble({qf, dqf});
    asym = std::max(asym, (ef.D - ef.D.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat5>(ef.D).eigenvalues().minCoeff());
    const Mat5 Nf = dD_dt<5>(f.linkage(), qf, dqf, h) - 2.0 * ef.C;
    skew = std::max(skew, (Nf + Nf.transpose()).cwiseAbs().maxCoeff());
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd qp = qf, qm = qf;
      qp(i) += h;
      qm(i) -= h;
      const double g = (f.linkage().potential_energy(qp) - f.linkage().potential_energy(qm)) / (2.0 * h);
      grad = std::max(grad, std::abs(ef.G(i) - g));
    }
  }
  const double t = seconds_since(t0);
  const bool ok = asym < 1e-12 && min_eig > 0.0 && skew < 1e-6 && grad < 1e-6 && t < 10.0;
  return {ok, fmt::format("min eig {:.2e}, asym {:.1e}, skew {:.1e}, grad {:.1e}, {:.2f} s", min_eig, asym, skew,
                          grad, t)};
}

Outcome ballistic_energy() {
  using State = std::array<double, 14>;
  const SagittalModel m{SagittalParams{}};
  SagittalState s0;
  s0.q << 0.3, 0.1, -0.4, -0.6, 0.05, 0.0, 0.5;
  s0.dq << 1.0, -2.0, 1.5, 0.5, -0.3, 0.4, 1.0;
  const double e0 = m.energy(s0);
  State x;
  for (int i = 0; i < 7; ++i) {
    x[i] = s0.q(i);
    x[7 + i] = s0.dq(i);
  }
  const auto rhs = [&](const State& y, State& dy, double) {
    SagittalState s;
    for (int i = 0; i < 7; ++i) {
      s.q(i) = y[i];
      s.dq(i) = y[7 + i];
    }
    const Vec7 a = m.accel(s, Vec7::Zero(), {});
    for (int i = 0; i < 7; ++i) {
      dy[i] = y[7 + i];
      dy[7 + i] = a(i);
    }
  };
  boost::numeric::odeint::runge_kutta4<State> stepper;
  boost::numeric::odeint::integrate_const(stepper, rhs, x, 0.0, 0.5, 1e-4);
  SagittalState s1;
  for (int i = 0; i < 7; ++i) {
    s1.q(i) = x[i];
    s1.dq(i) = x[7 + i];
  }
  const double drift = std::abs(m.energy(s1) - e0) / std::abs(e0);
  return {drift < 1e-6, fmt::format("relative energy drift {:.2e}", drift)};
}

Outcome terrain_limits() {
  const TerrainParams t;
  bool zero = true;
  for (double g : {0.0, 0.7, 1.5707963, 2.5}) {
    const auto k = kin_at(0.0, {0.1 * std::cos(g), 0.1 * std::sin(g)}, 0.02, {0.05, 0.1});
    const auto f = sagittal_forces(t, k);
    zero = zero && f.F_x == 0.0 && f.F_z == 0.0 && lateral_force(t, k) == 0.0;
  }

  const double fl = lateral_force(t, kin_at(0.03, {0.0, 0.1}, t.lambda));
  const double finf = lateral_force(t, kin_at(0.03, {0.0, 0.1}, 1e3));
  const double sat = std::abs(fl / finf - (1.0 - std::exp(-1.0)));

  double lin = 0.0;
  const auto k = kin_at(0.025, {0.07, 0.04}, 0.02);
  const auto f0 = sagittal_forces(t, k);
  const double y0 = lateral_force(t, k);
  TerrainParams tz = t;
  tz.zeta *= 2.5;
  const auto fz = sagittal_forces(tz, k);
  lin = std::max({lin, rel_err(fz.F_x, 2.5 * f0.F_x), rel_err(fz.F_z, 2.5 * f0.F_z),
                  rel_err(lateral_force(tz, k), 2.5 * y0)});
  TerrainParams tw = t;
  tw.W *= 3.0;
  const auto fw = sagittal_forces(tw, k);
  lin = std::max({lin, rel_err(fw.F_x, 3.0 * f0.F_x), rel_err(fw.F_z, 3.0 * f0.F_z)});

  bool flips = true;
  for (double g : {0.2, 0.8, 1.3}) {
    const Vec2 v(0.1 * std::cos(g), 0.1 * std::sin(g));
    const auto a = sagittal_forces(t, kin_at(0.03, v));
    const auto b = sagittal_forces(t, kin_at(0.03, {-v.x(), v.y()}));
    flips = flips && a.F_x != 0.0 && std::signbit(a.F_x) != std::signbit(b.F_x);
  }
  const bool ok = zero && sat < 1e-12 && lin < 1e-12 && flips;
  return {ok, fmt::format("zero at z=0 {}, saturation error {:.1e}, linearity error {:.1e}, F_x flips {}", zero, sat,
                          lin, flips)};
}

Outcome terrain_oracle() {
  const auto t0 = Clock::now();
  const TerrainParams t;
  double worst = 0.0;
  // Intruding directions from nearly horizontal forward to nearly horizontal backward.
  for (int i = 0; i < 10; ++i) {
    const double z = 0.005 + 0.005 * i;
    for (int j = 0; j < 10; ++j) {
      const double g = 0.05 + (oracle::kPi - 0.1) * j / 9.0;
      const Vec2 v(0.1 * std::cos(g), 0.1 * std::sin(g));
      const auto f = sagittal_forces(t, kin_at(z, v));
      const auto ref = oracle::wedge_quadrature(t, z, v);
      const double err = std::hypot(f.F_x - ref.F_x, f.F_z - ref.F_z) / std::hypot(ref.F_x, ref.F_z);
      worst = std::max(worst, err);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 30.0, fmt::format("max relative error {:.2e} on 10x10 grid, {:.2f} s", worst, secs)};
}

std::vector<PenetrationRecord> synthetic(const TerrainParams& t, PenetrationDirection dir, double noise,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<PenetrationRecord> out;
  for (int i = 1; i <= 40; ++i) {
    const double x = dir == PenetrationDirection::Vertical ? 0.002 * i : 0.004 * i;
    const double f = dir == PenetrationDirection::Vertical ? vertical_penetration_force(t, x)
                                                           : horizontal_penetration_force(t, x, 0.03);
    out.push_back({x, f * (1.0 + noise * n(rng)), dir});
  }
  return out;
}

Outcome calibration_round_trip() {
  TerrainParams truth;
  truth.zeta = 1.36;
  truth.lambda = 0.03;
  double ez = 0.0, el = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = calibrate(synthetic(truth, PenetrationDirection::Vertical, 0.01, 2 * seed),
                             synthetic(truth, PenetrationDirection::Horizontal, 0.01, 2 * seed + 1), TerrainParams{});
    ez = std::max(ez, std::abs(r.zeta / truth.zeta - 1.0));
    el = std::max(el, std::abs(r.lambda / truth.lambda - 1.0));
  }
  return {ez < 0.02 && el < 0.02, fmt::format("worst zeta error {:.2f}%, lambda error {:.2f}% over 5 seeds", 100 * ez,
                                              100 * el)};
}

double grid_lowest(const FootShape& s, double pitch) {
  const auto z_of = [&](double x) { return world_offset(s, pitch, x).y(); };
  const double lo = s.x_min() + 1e-9, hi = s.x_max() - 1e-9;
  int n = 200000;
  double best = lo, best_z = z_of(lo);
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    if (z_of(x) < best_z) best_z = z_of(best = x);
  }
  const double h = (hi - lo) / n;
  const double a = std::max(lo, best - h), b = std::min(hi, best + h);
  n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    if (z_of(x) < best_z) best_z = z_of(best = x);
  }
  return best;
}

Outcome rolling_kinematics() {
  const double R = 0.03, omega = 2.0, dt = 1e-4;
  const auto s = FootShape::semi_cylinder(R);
  const auto contact_world = [&](double pitch) {
    const Eigen::Vector2d centre(R * pitch, R);
    const Eigen::Vector2d to_origin = -Eigen::Vector2d(R * std::sin(pitch), R * std::cos(pitch));
    return Eigen::Vector2d(centre + to_origin + world_offset(s, pitch, lowest_point(s, pitch).x_r));
  };
  const double theta0 = orientation_angle(s, lowest_point(s, 0.0));
  double r_err = 0.0, a_err = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double p = omega * k * 0.01;
    const Eigen::Vector2d v = (contact_world(p + omega * dt) - contact_world(p - omega * dt)) / (2.0 * dt);
    r_err = std::max(r_err, std::abs(effective_radius(v, omega) / R - 1.0));
    a_err = std::max(a_err, std::abs(rolling_angle(theta0, orientation_angle(s, lowest_point(s, p))) - p));
  }
  double g_err = 0.0;
  for (double p : {-0.5, -0.2, 0.0, 0.15, 0.45}) g_err = std::max(g_err, std::abs(lowest_point(s, p).x_r - grid_lowest(s, p)));
  return {r_err < 0.01 && a_err < 1e-6 && g_err < 1e-8,
          fmt::format("R_eff error {:.2e}, rolling angle error {:.1e} rad, lowest point error {:.1e} m", r_err, a_err,
                      g_err)};
}

// Both forms share the distance and weight, so their ratio is the ratio of
// the two trapezoidal energy integrals. Comparing energies keeps the check
// defined when the start-up transient leaves a short walk with no net advance.
Outcome cot_cross_form() {
  double worst = 0.0;
  int steps = 5;
  for (TerrainMode m : {TerrainMode::Rigid, TerrainMode::Granular}) {
    SimConfig c;
    c.terrain_mode = m;
    // Five stances of the default gait.
    c.duration = 5.0 * c.gait.stance_duration() + 0.02;
    const auto traj = run(c);
    steps = std::min(steps, traj.back().stance_index + 1);
    double e = 0.0, e_dec = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const auto& a = traj[i - 1];
      const auto& b = traj[i];
      const double h = 0.5 * (b.t - a.t);
      e += h * (actuation_power(a, CotNorm::PerPlane) + actuation_power(b, CotNorm::PerPlane));
      e_dec += h * (std::abs(a.power_sagittal) + std::abs(a.power_frontal) + std::abs(b.power_sagittal) +
                    std::abs(b.power_frontal));
    }
    worst = std::max(worst, std::abs(e_dec / e - 1.0));
    if (m == TerrainMode::Rigid) {
      const auto rep = cost_of_transport(traj, weight_of(c), CotNorm::PerPlane);
      worst = std::max(worst, std::abs(rep.cot_decoupled / rep.cot - 1.0));
    }
  }
  return {worst < 0.01 && steps >= 5,
          fmt::format("per_plane forms differ by {:.2e} (relative) over {} steps on both terrains", worst, steps)};
}

struct WalkSummary {
  double cot = 0.0;
  double mean_roll = 0.0;  // mean |delta theta_r| at the end of complete stances
  bool early_sinkage_ok = true;
  bool zero_sinkage = true;
  double seconds = 0.0;
};

WalkSummary walk(TerrainMode m, std::uint64_t seed) {
  SimConfig c;
  c.terrain_mode = m;
  c.seed = seed;
  c.gait.v_target = 0.2;
  const auto t0 = Clock::now();
  const auto traj = run(c);
  WalkSummary w;
  w.seconds = seconds_since(t0);
  w.cot = cost_of_transport(traj, weight_of(c)).cot;

  std::map<int, double> end_roll;
  std::map<int, double> prev_z;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& r = traj[i];
    w.zero_sinkage = w.zero_sinkage && r.z_s == 0.0;
    const bool complete = i + 1 < traj.size() && traj.back().stance_index > r.stance_index;
    if (complete) end_roll[r.stance_index] = std::abs(r.delta_theta_r);
    // Early stance: the first third, after the touchdown sample.
    if (r.stance_phase > 0.0 && r.stance_phase <= 1.0 / 3.0) {
      auto it = prev_z.find(r.stance_index);
      w.early_sinkage_ok = w.early_sinkage_ok && r.z_s > 0.0 && (it == prev_z.end() || r.z_s >= it->second);
      prev_z[r.stance_index] = r.z_s;
    }
  }
  for (const auto& [k, v] : end_roll) w.mean_roll += v / static_cast<double>(end_roll.size());
  return w;
}

Outcome paper_reproduction() {
  bool a = true, b = true, c = true, fast = true;
  std::string rows;
  for (std::uint64_t seed : {1, 2, 3}) {
    const WalkSummary sand = walk(TerrainMode::Granular, seed);
    const WalkSummary rigid = walk(TerrainMode::Rigid, seed);
    const double ratio = sand.cot / rigid.cot;
    a = a && sand.cot > rigid.cot && ratio >= 1.05 && ratio <= 2.7;
    b = b && sand.mean_roll < rigid.mean_roll;
    c = c && sand.early_sinkage_ok && rigid.zero_sinkage;
    fast = fast && sand.seconds < 60.0 && rigid.seconds < 60.0;
    rows += fmt::format("; seed {}: CoT {:.2f}/{:.2f} ratio {:.2f}, |dtheta_r| {:.3f}/{:.3f}", seed, sand.cot,
                        rigid.cot, ratio, sand.mean_roll, rigid.mean_roll);
  }
  return {a && b && c && fast, fmt::format("(a) {} (b) {} (c) {} runtime {}{}", a ? "ok" : "FAIL", b ? "ok" : "FAIL",
                                           c ? "ok" : "FAIL", fast ? "ok" : "FAIL", rows)};
}

Outcome determinism() {
  SimConfig c;
  c.seed = 7;
  std::string csv[2];
  for (auto& s : csv) {
    std::ostringstream os;
    write_csv(os, run(c));
    s = os.str();
  }
  const bool same = csv[0] == csv[1] && !csv[0].empty();
  return {same, fmt::format("{} bytes, {}", csv[0].size(), same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> checks = {
      row_consistency,        structural_properties, ballistic_energy, terrain_limits,     terrain_oracle,
      calibration_round_trip, rolling_kinematics,    cot_cross_form,   paper_reproduction, determinism};

  int failed = 0;
  for (int n = 1; n <= 10; ++n) {
    if (only != 0 && n != only) continue;
    Outcome o;
    try {
      o = checks[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << fmt::format("criterion {:2d}: {} {}\n", n, o.pass ? "PASS" : "FAIL", o.detail) << std::flush;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
