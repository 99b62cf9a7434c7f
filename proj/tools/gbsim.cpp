// gbsim: simulate, sweep, calibrate and compare from the command line.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

#include "granular_biped/config.hpp"
#include "granular_biped/errors.hpp"
#include "granular_biped/metrics.hpp"
#include "granular_biped/terrain.hpp"
#include "granular_biped/trajectory_io.hpp"

#ifndef GBSIM_VERSION
#define GBSIM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace granular_biped;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitPartial = 4;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string terrain;
  double velocity = -1.0;
  long long seed = -1;
  int decimation = 0;
  std::vector<std::string> overrides;
};

std::string default_out_dir() {
  const char* env = std::getenv("GBSIM_OUT_DIR");
  return env && *env ? env : "gbsim_out";
}

void add_common(CLI::App* app, CommonOptions& o, bool with_velocity) {
  app->add_option("--config", o.config_path, "Configuration file (key = value or JSON)");
  app->add_option("--out", o.out_dir, "Output directory (default $GBSIM_OUT_DIR or ./gbsim_out)");
  app->add_option("--terrain", o.terrain, "Terrain mode override")->check(CLI::IsMember({"granular", "rigid"}));
  if (with_velocity) app->add_option("--velocity", o.velocity, "Commanded forward speed override [m/s]");
  app->add_option("--seed", o.seed, "Seed override");
  app->add_option("--decimation", o.decimation, "Log every n-th step")->check(CLI::PositiveNumber);
  app->add_option("--set", o.overrides, "Extra key=value override, repeatable");
}

RunConfig load(const CommonOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
    apply_override(c, boost::algorithm::trim_copy(kv.substr(0, eq)), boost::algorithm::trim_copy(kv.substr(eq + 1)));
  }
  if (!o.terrain.empty()) c.sim.terrain_mode = parse_terrain_mode(o.terrain);
  if (o.velocity >= 0.0) c.sim.gait.v_target = o.velocity;
  if (o.seed >= 0) c.sim.seed = static_cast<std::uint64_t>(o.seed);
  if (o.decimation > 0) c.sim.decimation = o.decimation;
  c.validate();
  return c;
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(default_out_dir()) : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(fmt::format("cannot write '{}'", p.string()));
  return f;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

RunManifest manifest_for(const RunConfig& c, const std::string& started) {
  RunManifest m;
  m.config_hash = hex64(fnv1a(to_key_value(c)));
  m.tool_version = GBSIM_VERSION;
  m.started = started;
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& dir) {
  m.finished = utc_timestamp();
  auto f = open_out(dir / "manifest.json");
  m.outputs.push_back((dir / "manifest.json").string());
  write_manifest(f, m);
}

int cmd_simulate(const CommonOptions& o) {
  const std::string started = utc_timestamp();
  const RunConfig c = load(o);
  const fs::path dir = prepare_out(o.out_dir);
  const Trajectory traj = run(c.sim);

  RunManifest m = manifest_for(c, started);
  {
    auto f = open_out(dir / "config.cfg");
    f << to_key_value(c);
    m.outputs.push_back((dir / "config.cfg").string());
  }
  {
    auto f = open_out(dir / "trajectory.csv");
    write_csv(f, traj);
    m.outputs.push_back((dir / "trajectory.csv").string());
  }
  Metadata meta{{"config_hash", m.config_hash},
                {"tool_version", m.tool_version},
                {"terrain_mode", to_string(c.sim.terrain_mode)},
                {"v_target", num(c.sim.gait.v_target)},
                {"seed", std::to_string(c.sim.seed)},
                {"cot_norm", to_string(c.metrics.cot_norm)}};
  {
    auto f = open_out(dir / "trajectory.json");
    write_json(f, traj, meta);
    m.outputs.push_back((dir / "trajectory.json").string());
  }

  m.summary = {{"records", std::to_string(traj.size())},
               {"stances", std::to_string(traj.empty() ? 0 : traj.back().stance_index + 1)},
               {"cot_norm", to_string(c.metrics.cot_norm)}};
  try {
    const double weight = c.sim.robot.sagittal.total_mass() * c.sim.robot.sagittal.g;
    const CotReport r =
        cost_of_transport(traj, weight, c.metrics.cot_norm, c.metrics.window_start, c.metrics.window_end);
    m.summary.push_back({"cot", num(r.cot)});
    m.summary.push_back({"cot_decoupled", num(r.cot_decoupled)});
    m.summary.push_back({"energy", num(r.energy)});
    m.summary.push_back({"distance", num(r.distance)});
    std::cout << fmt::format("{}: {} records, distance {:.3f} m, CoT {:.3f} ({})\n", dir.string(), traj.size(),
                             r.distance, r.cot, to_string(c.metrics.cot_norm));
  } catch (const ZeroDistanceError& e) {
    m.summary.push_back({"cot", "undefined"});
    std::cout << fmt::format("{}: {} records, CoT undefined ({})\n", dir.string(), traj.size(), e.what());
  }
  finish_manifest(m, dir);
  return 0;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (p.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(p, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != p.size() || used == 0) throw CLI::ValidationError("--velocities", "malformed number '" + p + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_sweep(const CommonOptions& o, const std::string& velocities, bool velocities_given, int repeats, int jobs) {
  const std::string started = utc_timestamp();
  const RunConfig c = load(o);
  SweepOptions opt;
  if (velocities_given) {
    opt.velocities = parse_list(velocities);
    if (opt.velocities.empty()) throw CLI::ValidationError("--velocities", "empty velocity list");
  }
  if (!o.terrain.empty()) opt.terrains = {parse_terrain_mode(o.terrain)};
  opt.repeats = repeats;
  opt.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opt.isolate_failures = true;
  const fs::path dir = prepare_out(o.out_dir);
  const auto rows = velocity_sweep(c.sim, c.metrics, opt);

  RunManifest m = manifest_for(c, started);
  int failures = 0;
  {
    auto f = open_out(dir / "sweep.csv");
    f << "velocity,dimless_v,terrain,cot_mean,cot_std,repeats,failures,error\n";
    for (const auto& r : rows) {
      std::string err = r.error;
      boost::algorithm::replace_all(err, "\"", "'");
      f << fmt::format("{},{},{},{},{},{},{},\"{}\"\n", num(r.v_target), num(r.dimless_v), to_string(r.terrain),
                       num(r.cot_mean), num(r.cot_std), r.repeats, r.failures, err);
      failures += r.failures;
      if (!r.error.empty()) std::cerr << "error: sweep cell failed: " << r.error << '\n';
    }
    m.outputs.push_back((dir / "sweep.csv").string());
  }
  m.summary = {{"rows", std::to_string(rows.size())},
               {"failed_cells", std::to_string(failures)},
               {"cot_norm", to_string(c.metrics.cot_norm)},
               {"h_com", num(c.metrics.h_com)}};
  finish_manifest(m, dir);
  for (const auto& r : rows) {
    std::cout << fmt::format("v={:.2f} ({:.4f}) {:8s} CoT {:.3f} +/- {:.3f} [{} ok, {} failed]\n", r.v_target,
                             r.dimless_v, to_string(r.terrain), r.cot_mean, r.cot_std, r.repeats, r.failures);
  }
  return failures > 0 ? kExitPartial : 0;
}

std::vector<PenetrationRecord> read_penetration(const std::string& path, PenetrationDirection d) {
  std::ifstream f(path);
  if (!f) throw Error(fmt::format("cannot open '{}'", path));
  try {
    return read_penetration_csv(f, d);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path, e.what()), e.line());
  }
}

int cmd_calibrate(const CommonOptions& o, const std::string& vertical, const std::string& horizontal,
                  double test_depth) {
  const std::string started = utc_timestamp();
  RunConfig c = load(o);
  const auto v = read_penetration(vertical, PenetrationDirection::Vertical);
  const auto h = read_penetration(horizontal, PenetrationDirection::Horizontal);
  const CalibrationResult r = calibrate(v, h, c.sim.terrain, test_depth);
  c.sim.terrain.zeta = r.zeta;
  c.sim.terrain.lambda = r.lambda;

  const fs::path dir = prepare_out(o.out_dir);
  RunManifest m = manifest_for(c, started);
  {
    auto f = open_out(dir / "calibrated.cfg");
    f << "# fitted from " << vertical << " and " << horizontal << '\n' << to_key_value(c);
    m.outputs.push_back((dir / "calibrated.cfg").string());
  }
  {
    auto f = open_out(dir / "calibration_report.csv");
    f << "zeta,lambda,residual_vertical,residual_horizontal,vertical_points,horizontal_points\n";
    f << fmt::format("{},{},{},{},{},{}\n", num(r.zeta), num(r.lambda), num(r.residual_vertical),
                     num(r.residual_horizontal), v.size(), h.size());
    m.outputs.push_back((dir / "calibration_report.csv").string());
  }
  m.summary = {{"zeta", num(r.zeta)},
               {"lambda", num(r.lambda)},
               {"residual_vertical", num(r.residual_vertical)},
               {"residual_horizontal", num(r.residual_horizontal)}};
  finish_manifest(m, dir);
  std::cout << fmt::format("zeta = {:.6g}, lambda = {:.6g} m (rms residuals {:.3g} N, {:.3g} N)\n", r.zeta, r.lambda,
                           r.residual_vertical, r.residual_horizontal);
  return 0;
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(fmt::format("cannot open '{}'", path));
  try {
    return read_csv(f);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path, e.what()), e.line());
  }
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& fields_text, int points,
                const std::string& out) {
  std::vector<std::string> fields;
  boost::algorithm::split(fields, fields_text, boost::is_any_of(","));
  for (auto& f : fields) boost::algorithm::trim(f);
  fields.erase(std::remove(fields.begin(), fields.end(), std::string()), fields.end());
  if (fields.empty()) throw CLI::ValidationError("--fields", "empty field list");
  const auto rows = compare_trajectories(read_trajectory(a), read_trajectory(b), fields, points);

  std::ostringstream csv;
  csv << "field,rmse,stances_a,stances_b\n";
  for (const auto& r : rows) csv << fmt::format("{},{},{},{}\n", r.field, num(r.rmse), r.stances_a, r.stances_b);
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    const fs::path p(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    auto f = open_out(p);
    f << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bipedal walking on granular media: simulation and analysis"};
  app.set_version_flag("--version", std::string(GBSIM_VERSION));
  app.require_subcommand(1);

  CommonOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "Run one simulation and write trajectory files");
  add_common(sim, sim_opt, true);

  CommonOptions sweep_opt;
  std::string velocities;
  int repeats = 3;
  int jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "CoT over a velocity grid on both terrains");
  add_common(sweep, sweep_opt, false);
  auto* vel_flag = sweep->add_option("--velocities", velocities, "Comma-separated speeds (default 0.1,...,0.5)");
  sweep->add_option("--repeats", repeats, "Runs per cell, seeds seed..seed+n-1")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", jobs, "Parallel runs (default: available cores)")->check(CLI::NonNegativeNumber);

  CommonOptions cal_opt;
  std::string vertical, horizontal;
  double test_depth = 0.03;
  auto* cal = app.add_subcommand("calibrate", "Fit zeta and lambda to penetration data");
  add_common(cal, cal_opt, false);
  cal->add_option("--vertical", vertical, "CSV with header depth_m,force_N")->required();
  cal->add_option("--horizontal", horizontal, "CSV with header disp_m,force_N")->required();
  cal->add_option("--test-depth", test_depth, "Depth of the horizontal drag tests [m]");

  std::string traj_a, traj_b, fields = "q_s1,q_s2,q_s3,q_s4,F_x,F_z,x_s,z_s", cmp_out;
  int points = 101;
  auto* cmp = app.add_subcommand("compare", "Per-field RMSE of mean stance profiles");
  cmp->add_option("traj_a", traj_a, "Trajectory CSV")->required();
  cmp->add_option("traj_b", traj_b, "Trajectory CSV")->required();
  cmp->add_option("--fields", fields, "Comma-separated trajectory columns");
  cmp->add_option("--points", points, "Stance-phase grid size")->check(CLI::Range(2, 100000));
  cmp->add_option("--out", cmp_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_opt);
    if (*sweep) return cmd_sweep(sweep_opt, velocities, vel_flag->count() > 0, repeats, jobs);
    if (*cal) return cmd_calibrate(cal_opt, vertical, horizontal, test_depth);
    if (*cmp) return cmd_compare(traj_a, traj_b, fields, points, cmp_out);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << fmt::format("error: simulation diverged at t = {:.4f} s: {}\n", e.time(), e.what());
    return kExitDivergence;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
