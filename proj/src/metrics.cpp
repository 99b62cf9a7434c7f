#include "granular_biped/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "granular_biped/errors.hpp"
#include "granular_biped/trajectory_io.hpp"

namespace granular_biped {

std::string to_string(CotNorm n) {
  switch (n) {
    case CotNorm::PerJoint: return "per_joint";
    case CotNorm::Net: return "net";
    case CotNorm::PerPlane: return "per_plane";
  }
  return "per_joint";
}

CotNorm parse_cot_norm(const std::string& s) {
  if (s == "per_joint") return CotNorm::PerJoint;
  if (s == "net") return CotNorm::Net;
  if (s == "per_plane") return CotNorm::PerPlane;
  throw DomainError(fmt::format("unknown CoT norm '{}' (per_joint | net | per_plane)", s));
}

void MetricsConfig::validate() const {
  if (!(h_com > 0.0)) throw DomainError("metrics h_com must be positive");
  if (!(window_end > window_start)) throw DomainError("metrics window_end must exceed window_start");
}

double sagittal_joint_power(const SimRecord& r) {
  double p = 0.0;
  for (int j : {joint::kLeftThigh, joint::kLeftKnee, joint::kRightThigh, joint::kRightKnee}) {
    p += r.tau_a(j) * r.dq_a(j);
  }
  return p;
}

double frontal_joint_power(const SimRecord& r) {
  return r.tau_a(joint::kLeftHip) * r.dq_a(joint::kLeftHip) + r.tau_a(joint::kRightHip) * r.dq_a(joint::kRightHip);
}

double actuation_power(const SimRecord& r, CotNorm norm) {
  switch (norm) {
    case CotNorm::PerJoint: return r.tau_a.cwiseProduct(r.dq_a).cwiseAbs().sum();
    case CotNorm::Net: return std::abs(r.tau_a.dot(r.dq_a));
    case CotNorm::PerPlane: return std::abs(sagittal_joint_power(r)) + std::abs(frontal_joint_power(r));
  }
  return 0.0;
}

CotReport cost_of_transport(const Trajectory& traj, double weight, CotNorm norm, double t_start, double t_end) {
  if (!(weight > 0.0)) throw DomainError("robot weight must be positive");
  std::size_t lo = 0;
  while (lo < traj.size() && traj[lo].t < t_start) ++lo;
  std::size_t hi = lo;
  while (hi < traj.size() && traj[hi].t <= t_end) ++hi;
  if (hi - lo < 2) throw DomainError("CoT needs at least two records inside the window");

  CotReport rep;
  rep.norm = norm;
  rep.weight = weight;
  rep.t0 = traj[lo].t;
  rep.tf = traj[hi - 1].t;
  for (std::size_t k = lo + 1; k < hi; ++k) {
    const SimRecord& a = traj[k - 1];
    const SimRecord& b = traj[k];
    const double h = 0.5 * (b.t - a.t);
    rep.energy += h * (actuation_power(a, norm) + actuation_power(b, norm));
    rep.energy_sagittal += h * (std::abs(a.power_sagittal) + std::abs(b.power_sagittal));
    rep.energy_frontal += h * (std::abs(a.power_frontal) + std::abs(b.power_frontal));
    rep.distance += h * (a.com_vx + b.com_vx);
  }
  rep.energy_decoupled = rep.energy_sagittal + rep.energy_frontal;
  if (rep.distance < 1e-6) {
    throw ZeroDistanceError(fmt::format("walking distance {:.3g} m is below 1e-6 m", rep.distance));
  }
  rep.cot = rep.energy / (weight * rep.distance);
  rep.cot_decoupled = rep.energy_decoupled / (weight * rep.distance);
  return rep;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError(fmt::format("rmse: length mismatch {} vs {}", a.size(), b.size()));
  if (a.size() < 2) throw DomainError("rmse: series need at least two samples");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::vector<double> resample(const std::vector<double>& t, const std::vector<double>& y,
                             const std::vector<double>& grid) {
  if (t.size() != y.size() || t.size() < 2) throw DomainError("resample: need matching series of length >= 2");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw DomainError("resample: abscissa must be strictly increasing");
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(t.back()));
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t k = 1;
  for (double g : grid) {
    if (g < t.front() - tol || g > t.back() + tol) throw DomainError("resample: grid point outside the data range");
    while (k + 1 < t.size() && t[k] < g) ++k;
    const double w = std::clamp((g - t[k - 1]) / (t[k] - t[k - 1]), 0.0, 1.0);
    out.push_back((1.0 - w) * y[k - 1] + w * y[k]);
  }
  return out;
}

std::vector<double> phase_grid(int n) {
  if (n < 2) throw DomainError("phase grid needs at least two points");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = static_cast<double>(i) / (n - 1);
  return g;
}

namespace {

struct Profile {
  std::vector<double> mean;
  int stances = 0;
};

Profile profile(const Trajectory& traj, const std::string& field, int points, double t_start, double t_end) {
  if (!is_record_column(field)) throw DomainError(fmt::format("unknown trajectory field '{}'", field));
  const std::vector<double> grid = phase_grid(points);
  Profile p;
  p.mean.assign(points, 0.0);
  std::size_t i = 0;
  while (i < traj.size()) {
    std::size_t j = i;
    while (j < traj.size() && traj[j].stance_index == traj[i].stance_index) ++j;
    // The last stance may be cut by the end of the run; the first is
    // complete only if it was logged from its start.
    const bool complete = j < traj.size() && (i > 0 || traj[i].stance_phase < 0.05);
    if (complete && j - i >= 2 && traj[i].t >= t_start && traj[j - 1].t <= t_end) {
      std::vector<double> ph, y;
      const double t0 = traj[i].t, t1 = traj[j - 1].t;
      for (std::size_t k = i; k < j; ++k) {
        ph.push_back((traj[k].t - t0) / (t1 - t0));
        y.push_back(record_field(traj[k], field));
      }
      const auto r = resample(ph, y, grid);
      for (int n = 0; n < points; ++n) p.mean[n] += r[n];
      ++p.stances;
    }
    i = j;
  }
  if (p.stances == 0) throw DomainError("no complete stance inside the requested time range");
  for (double& v : p.mean) v /= p.stances;
  return p;
}

}  // namespace

std::vector<double> stance_profile(const Trajectory& traj, const std::string& field, int points, double t_start,
                                   double t_end) {
  return profile(traj, field, points, t_start, t_end).mean;
}

std::vector<FieldRmse> compare_trajectories(const Trajectory& a, const Trajectory& b,
                                            const std::vector<std::string>& fields, int points) {
  for (const auto& f : fields) {
    if (!is_record_column(f)) throw DomainError(fmt::format("unknown trajectory field '{}'", f));
  }
  if (a.size() < 2 || b.size() < 2) throw DomainError("compare: trajectories need at least two records");
  const double lo = std::max(a.front().t, b.front().t);
  const double hi = std::min(a.back().t, b.back().t);
  if (!(hi > lo)) throw DomainError("compare: trajectories cover disjoint time ranges");
  std::vector<FieldRmse> out;
  for (const auto& f : fields) {
    const Profile pa = profile(a, f, points, lo, hi);
    const Profile pb = profile(b, f, points, lo, hi);
    out.push_back({f, rmse(pa.mean, pb.mean), pa.stances, pb.stances});
  }
  return out;
}

std::vector<SweepRow> velocity_sweep(const SimConfig& base, const MetricsConfig& metrics, const SweepOptions& options) {
  if (options.velocities.empty()) throw DomainError("sweep needs at least one velocity");
  if (options.terrains.empty()) throw DomainError("sweep needs at least one terrain mode");
  if (options.repeats < 1) throw DomainError("sweep repeats must be >= 1");
  metrics.validate();

  const std::size_t nv = options.velocities.size();
  const std::size_t nt = options.terrains.size();
  const std::size_t nr = static_cast<std::size_t>(options.repeats);
  const std::size_t cells = nv * nt * nr;
  std::vector<double> cot(cells, 0.0);
  std::vector<std::string> error(cells);
  std::vector<char> failed(cells, 0);

  const auto run_cell = [&](std::size_t c) {
    const std::size_t vi = c / (nt * nr);
    const std::size_t ti = (c / nr) % nt;
    const std::size_t ri = c % nr;
    SimConfig cfg = base;
    cfg.gait.v_target = options.velocities[vi];
    cfg.terrain_mode = options.terrains[ti];
    cfg.seed = base.seed + ri;
    try {
      cfg.validate();
      const Trajectory traj = run(cfg);
      const double weight = cfg.robot.sagittal.total_mass() * cfg.robot.sagittal.g;
      cot[c] = cost_of_transport(traj, weight, metrics.cot_norm, metrics.window_start, metrics.window_end).cot;
    } catch (const std::exception& e) {
      failed[c] = 1;
      error[c] = fmt::format("v={} terrain={} repeat={}: {}", cfg.gait.v_target, to_string(cfg.terrain_mode), ri,
                             e.what());
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(cells)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) run_cell(c);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<SweepRow> rows;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      SweepRow row;
      row.v_target = options.velocities[vi];
      row.dimless_v = row.v_target / std::sqrt(base.robot.sagittal.g * metrics.h_com);
      row.terrain = options.terrains[ti];
      double sum = 0.0, sq = 0.0;
      for (std::size_t ri = 0; ri < nr; ++ri) {
        const std::size_t c = (vi * nt + ti) * nr + ri;
        if (failed[c]) {
          if (!options.isolate_failures) throw SweepError(error[c]);
          if (row.error.empty()) row.error = error[c];
          ++row.failures;
          continue;
        }
        sum += cot[c];
        ++row.repeats;
      }
      if (row.repeats > 0) {
        row.cot_mean = sum / row.repeats;
        for (std::size_t ri = 0; ri < nr; ++ri) {
          const std::size_t c = (vi * nt + ti) * nr + ri;
          if (!failed[c]) sq += (cot[c] - row.cot_mean) * (cot[c] - row.cot_mean);
        }
        row.cot_std = row.repeats > 1 ? std::sqrt(sq / (row.repeats - 1)) : 0.0;
      } else {
        row.cot_mean = std::nan("");
        row.cot_std = std::nan("");
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace granular_biped
