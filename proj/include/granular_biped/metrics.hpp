#pragma once

#include <limits>
#include <string>
#include <vector>

#include "granular_biped/sim.hpp"

namespace granular_biped {

/// How the power norm in the CoT integrand is taken.
/// PerJoint: sum_j |tau_j qdot_j|. Net: |tau_a^T qdot_a|.
/// PerPlane: |sagittal joint power| + |hip roll power|, the grouping of the
/// decoupled form.
enum class CotNorm { PerJoint, Net, PerPlane };

std::string to_string(CotNorm n);
CotNorm parse_cot_norm(const std::string& s);

struct MetricsConfig {
  CotNorm cot_norm = CotNorm::PerJoint;
  double h_com = 0.40;        ///< CoM height used for the dimensionless speed [m]
  double window_start = 0.0;  ///< records before this time are ignored [s]
  double window_end = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct CotReport {
  double cot = 0.0;            ///< actuation-space form
  double cot_decoupled = 0.0;  ///< sum over planes of |(S_i^T tau)^T qdot^i|
  double energy = 0.0;         ///< J
  double energy_decoupled = 0.0;
  double energy_sagittal = 0.0;
  double energy_frontal = 0.0;
  double distance = 0.0;  ///< integral of the CoM forward speed [m]
  double weight = 0.0;    ///< N
  double t0 = 0.0, tf = 0.0;
  CotNorm norm = CotNorm::PerJoint;
};

/// Trapezoidal CoT over the records inside [t_start, t_end].
/// Throws DomainError on fewer than two records and ZeroDistanceError when
/// |d| < 1e-6 m.
CotReport cost_of_transport(const Trajectory& traj, double weight, CotNorm norm = CotNorm::PerJoint,
                            double t_start = -std::numeric_limits<double>::infinity(),
                            double t_end = std::numeric_limits<double>::infinity());

/// Instantaneous integrand of the actuation-space form.
double actuation_power(const SimRecord& r, CotNorm norm);
/// Sagittal joint power and hip roll power; they sum to tau_a^T qdot_a.
double sagittal_joint_power(const SimRecord& r);
double frontal_joint_power(const SimRecord& r);

/// sqrt(mean((a - b)^2)); throws DomainError unless sizes match and are >= 2.
double rmse(const std::vector<double>& a, const std::vector<double>& b);

/// Linear interpolation of (t, y) at each grid point; t strictly increasing
/// and the grid inside [t.front(), t.back()], otherwise DomainError.
std::vector<double> resample(const std::vector<double>& t, const std::vector<double>& y,
                             const std::vector<double>& grid);

/// n points evenly spaced over [0, 1].
std::vector<double> phase_grid(int n);

/// Mean over all complete stances of `field` against stance phase in [0, 1].
/// Only stances that start and end inside [t_start, t_end] are used.
std::vector<double> stance_profile(const Trajectory& traj, const std::string& field, int points = 101,
                                   double t_start = -std::numeric_limits<double>::infinity(),
                                   double t_end = std::numeric_limits<double>::infinity());

struct FieldRmse {
  std::string field;
  double rmse = 0.0;
  int stances_a = 0, stances_b = 0;
};

/// Per-field RMSE between the mean stance profiles of two trajectories over
/// their common time range. Throws DomainError on disjoint ranges or an
/// unknown field.
std::vector<FieldRmse> compare_trajectories(const Trajectory& a, const Trajectory& b,
                                            const std::vector<std::string>& fields, int points = 101);

struct SweepRow {
  double v_target = 0.0;
  double dimless_v = 0.0;  ///< v / sqrt(g h_com)
  TerrainMode terrain = TerrainMode::Granular;
  double cot_mean = 0.0;
  double cot_std = 0.0;  ///< sample standard deviation, 0 for one repeat
  int repeats = 0;       ///< successful runs
  int failures = 0;
  std::string error;     ///< first failure, empty when none
};

struct SweepOptions {
  std::vector<double> velocities{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<TerrainMode> terrains{TerrainMode::Granular, TerrainMode::Rigid};
  int repeats = 1;
  int jobs = 1;
  /// When false the first failing cell aborts the sweep with SweepError.
  bool isolate_failures = false;
};

/// Runs every (velocity, terrain, repeat) cell; repeat r uses seed base.seed + r.
/// Rows are ordered by velocity, then terrain as listed in options.
std::vector<SweepRow> velocity_sweep(const SimConfig& base, const MetricsConfig& metrics, const SweepOptions& options);

}  // namespace granular_biped
