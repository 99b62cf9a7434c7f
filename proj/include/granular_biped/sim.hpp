#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "granular_biped/dynamics.hpp"
#include "granular_biped/gait.hpp"
#include "granular_biped/rolling.hpp"
#include "granular_biped/terrain.hpp"

namespace granular_biped {

enum class Integrator { SemiImplicitEuler, Rk4 };
enum class TerrainMode { Granular, Rigid };

std::string to_string(Integrator i);
std::string to_string(TerrainMode m);
Integrator parse_integrator(const std::string& s);
TerrainMode parse_terrain_mode(const std::string& s);

struct RobotConfig {
  SagittalParams sagittal;
  double hip_spacing = 0.12;  ///< m
  double foot_radius = 0.03;  ///< semi-cylindrical sole centred at the ankle [m]

  FrontalParams frontal() const { return FrontalParams::from_sagittal(sagittal, hip_spacing); }
  void validate() const;
};

/// Joint-space tracking controller standing in for a whole-body controller.
struct ControllerConfig {
  double hip_height = 0.40;     ///< nominal stance hip height over a rigid floor [m]
  double trunk_pitch = 0.0;     ///< trunk reference [rad]
  double placement_gain = 0.15; ///< foot placement per unit speed error [s]
  double placement_integral_gain = 0.05;  ///< per-step accumulation of the placement bias [s]
  double placement_bias_limit = 0.10;    ///< m
  double push_depth = 0.01;     ///< swing target below the surface at touchdown [m]
  double min_touchdown_phase = 0.5;
  double extension_time = 0.5;  ///< stance fraction over which the leg length reaches its goal
  double lateral_capture_gain = 0.2;  ///< lateral foot target = CoM + gain * CoM velocity + offset [s]
  double lateral_offset = 0.0;        ///< outward shift of the lateral foot target [m]
  double lateral_latch_phase = 0.7;   ///< swing phase after which the lateral target is frozen
  double kp_trunk = 300.0, kd_trunk = 3.0;
  double kp_stance_knee = 400.0, kd_stance_knee = 3.0;
  double kp_swing_thigh = 200.0, kd_swing_thigh = 3.0;
  double kp_swing_knee = 100.0, kd_swing_knee = 1.6;
  double kp_pelvis = 300.0, kd_pelvis = 3.0;
  double kp_swing_roll = 200.0, kd_swing_roll = 3.0;
  double tau_max = 60.0;        ///< N m
};

struct SimConfig {
  double dt = 1e-3;
  Integrator integrator = Integrator::SemiImplicitEuler;
  double duration = 2.0;
  TerrainMode terrain_mode = TerrainMode::Granular;
  GaitConfig gait;
  TerrainParams terrain;
  RobotConfig robot;
  ControllerConfig controller;
  std::uint64_t seed = 1;
  double init_noise = 0.01;  ///< relative perturbation of the initial speed
  int decimation = 1;
  double divergence_limit = 1e6;
  double baumgarte_omega = 50.0;
  double r_eff_cap = 10.0;   ///< recorded when the foot does not rotate [m]

  void validate() const;
};

enum class ContactEvent { None, Touchdown, Liftoff };

/// Downward crossing of the sand level is a touchdown, upward a liftoff.
ContactEvent detect_touchdown(double prev_height, double height, double sand_level);

struct SimRecord {
  double t = 0.0;
  int stance_leg = 0;  ///< 0 left, 1 right
  int stance_index = 0;
  double stance_phase = 0.0;  ///< time since touchdown over the stance duration
  Vec7 q_s = Vec7::Zero(), dq_s = Vec7::Zero();
  Vec5 q_f = Vec5::Zero(), dq_f = Vec5::Zero();
  Vec6 q_a = Vec6::Zero(), dq_a = Vec6::Zero(), tau_a = Vec6::Zero();
  double F_x = 0.0, F_y = 0.0, F_z = 0.0;
  double x_s = 0.0, y_s = 0.0, z_s = 0.0;
  double theta_r = 0.0, delta_theta_r = 0.0, gamma = 0.0, R_eff = 0.0;
  int gamma_defined = 0;
  int stuck = 0;  ///< foot held by the medium without yielding
  double power = 0.0, power_sagittal = 0.0, power_frontal = 0.0;
  double com_x = 0.0, com_z = 0.0, com_vx = 0.0, com_vz = 0.0;
};

using Trajectory = std::vector<SimRecord>;

/// Complete simulator state between steps.
struct WalkerState {
  double t = 0.0;
  SagittalState sagittal;
  FrontalState frontal;
  Leg stance = Leg::Left;
  int stance_index = 0;
  double stance_start = 0.0;
  Vec2 c0 = Vec2::Zero();          ///< contact point at touchdown (world, z up)
  Vec2 ankle0 = Vec2::Zero();      ///< stance ankle at touchdown
  double theta_r0 = 0.0;
  Vec2 swing_start = Vec2::Zero(); ///< swing ankle relative to hip at liftoff
  double swing_roll_start = std::numbers::pi;  ///< frontal swing leg angle at liftoff
  double stance_start_x = 0.0;   ///< hip position at touchdown
  double stance_length0 = 0.0;   ///< hip-ankle distance at touchdown
  double step_speed = 0.0;       ///< mean hip speed over the previous step
  double placement_bias = 0.0;   ///< integral term of the placement law [m]
  bool lateral_latched = false;
  double lateral_target = 0.0;   ///< frozen lateral foot target in the frontal frame [m]
  double prev_swing_height = 0.0;
};

/// Forces and intrusion variables evaluated at one state.
struct ContactReadout {
  GrfSagittal sagittal;
  double F_y = 0.0;
  double x_s = 0.0, y_s = 0.0, z_s = 0.0;
  Vec2 v_s = Vec2::Zero();
  bool stuck = false;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& config);
  Simulator(const SimConfig& config, const WalkerState& initial);

  const SimConfig& config() const { return config_; }
  const WalkerState& state() const { return state_; }
  const SagittalModel& sagittal_model() const { return sagittal_; }
  const FrontalModel& frontal_model() const { return frontal_; }

  /// Controller output for the current state.
  Vec6 control() const;
  /// One fixed step with the actuation torques held; handles touchdown.
  /// Throws DivergenceError.
  ContactEvent step(const Vec6& tau_a);
  SimRecord record(const Vec6& tau_a) const;

  /// Joint angles and rates in actuation coordinates.
  void actuation_state(Vec6& q_a, Vec6& dq_a) const;
  ContactReadout contact(const WalkerState& s) const;
  double swing_foot_height(const WalkerState& s) const;

  /// Builds a consistent start-of-stance state for the configured gait.
  static WalkerState initial_state(const SimConfig& config);

 private:
  struct Accel {
    Vec7 qdd_s;
    Vec5 qdd_f;
    ContactReadout contact;
  };
  Accel evaluate(const WalkerState& s, const Vec6& tau_a) const;
  /// Lateral capture point of the frontal CoM, shifted outwards.
  double capture_target(const WalkerState& s) const;
  /// Frontal swing leg angle that puts the foot at lateral position y.
  double roll_towards(const WalkerState& s, double y) const;
  std::vector<Vec2> yield_locus(double z_s) const;
  Vec2 slip_force(double z_s, const Vec2& v_free, const Eigen::Matrix2d& A_dt) const;
  void integrate(const Vec6& tau_a);
  void touchdown();
  void check_divergence() const;

  SimConfig config_;
  SagittalModel sagittal_;
  FrontalModel frontal_;
  FootShape foot_;
  WalkerState state_;
};

/// Runs the closed loop for config.duration; one record per `decimation`
/// steps. Deterministic for a given config.
Trajectory run(const SimConfig& config);

}  // namespace granular_biped
