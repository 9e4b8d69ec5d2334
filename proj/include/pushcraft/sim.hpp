#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pushcraft/kghs.hpp"
#include "pushcraft/switching.hpp"
#include "pushcraft/tracking.hpp"

namespace pushcraft {

struct DisturbanceConfig {
  double rate = 0.0;         // Hz; 0 disables
  double sigma_ratio = 0.0;  // noise std per unit of current speed
  std::uint64_t seed = 1;
};

struct ReplanConfig {
  double deviation_threshold = 0.2;  // m (weighted) from the planned trajectory
  double stuck_window = 5.0;         // s
  double stuck_distance = 0.02;      // weighted motion that still counts as stuck
  double clearance_min = 0.125;      // m; the robot radius by default
  int max_replans = 5;
};

struct SimConfig {
  double rate = 240.0;             // Hz
  double goal_tolerance = 0.2;     // m, position
  double settle_tolerance = 0.02;  // weighted; ends the episode early after success
  double settle_time = 5.0;        // s allowed for refinement after success
  double switch_tolerance = 0.1;   // weighted distance that completes a mode run
  double timeout = 120.0;          // s
  double robot_radius = 0.125;
  double contact_tolerance = 0.02; // m gap before a contact counts as broken
  double tangential_weight = 0.1;  // of the sliding rows in the rigid-attachment fit
  double reach = 1.0;              // local goal distance (nominal speed x horizon)
  int projection_samples = 4000;   // sphere directions per allowed-set cache
  double reference_spacing = 0.02;
  std::optional<double> teleport_time;  // test hook: displace the object once
  SE2State teleport_offset;
};

enum class Phase { Push, Switch };
const char* phase_name(Phase p);

struct SimState {
  SE2State object;
  std::vector<SE2State> robots;
  InteractionMode mode;           // contact i is served by robot i
  std::vector<bool> in_contact;   // per robot
  size_t segment = 0;             // plan cursor
  double clock = 0.0;
};

struct StepOutcome {
  BodyVelocity desired;   // body frame, from rigid attachment
  BodyVelocity realized;  // body frame, before disturbance
  BodyVelocity applied;   // body frame, with disturbance
  bool projected = false;
  bool broken = false;    // a contact separated beyond tolerance
};

/// Quasi-static contact resolution with a cached allowed-direction set per
/// (mode, active contacts) and piecewise-constant velocity noise.
class Simulator {
 public:
  Simulator(const ObjectIntrinsics& intr, const SimConfig& cfg, const DisturbanceConfig& dist);

  StepOutcome step(SimState& s, const std::vector<RobotCommand>& commands, double dt);

  /// Allowed direction of `mode` closest (weighted angle) to p_des, scaled
  /// to the along-direction speed; zero when nothing allowed points forward.
  BodyVelocity project(const InteractionMode& mode, const BodyVelocity& p_des);

  /// Body velocity whose rigid-attachment contact velocities best match
  /// `contact_vel` (world) at world points `contacts` with inward normals
  /// `normals`, for an object at `obj`.
  /// Tangential rows are scaled by `tangential_weight` (robots may slide).
  static BodyVelocity rigid_inverse(const SE2State& obj, const std::vector<Vec2>& contacts,
                                    const std::vector<Vec2>& normals, const std::vector<Vec2>& contact_vel,
                                    double tangential_weight = 1.0);

  const ObjectIntrinsics& intrinsics() const { return intr_; }
  const SimConfig& config() const { return cfg_; }

 private:
  struct AllowedSet {
    std::vector<Eigen::Vector3d> dirs;  // unit, in (vx, vy, c omega)
  };
  const AllowedSet& allowed(const InteractionMode& mode);

  ObjectIntrinsics intr_;
  SimConfig cfg_;
  DisturbanceConfig dist_;
  std::mt19937_64 rng_;
  Eigen::Vector3d noise_ = Eigen::Vector3d::Zero();
  double next_noise_ = 0.0;
  std::map<std::vector<long long>, AllowedSet> cache_;
};

/// Nearest outline point fraction for a body-frame point.
double nearest_boundary_fraction(const Polygon& outline, const Vec2& body_point);

/// Robot i travels along waypoints[i] (world frame, object held still) to
/// serve aligned.contacts[i].
struct SwitchMotion {
  InteractionMode aligned;
  std::vector<std::vector<Vec2>> waypoints;
  std::vector<size_t> next;
};

/// Non-crossing reassignment of the robots onto `to`, offset `gap` beyond
/// the robot radius while travelling.
SwitchMotion plan_switch(const SimState& s, const InteractionMode& to, const ObjectIntrinsics& intr, double robot_radius,
                         double gap);

/// Commands for one switch step at `speed`; true once every robot has arrived.
bool switch_commands(SwitchMotion& m, const std::vector<SE2State>& robots, double speed, double dt,
                     std::vector<RobotCommand>& commands);

struct LogRecord {
  double t = 0.0;
  Phase phase = Phase::Push;
  size_t segment = 0;
  SE2State object;
  SE2State reference;  // what the controller tracks at this instant
  std::vector<SE2State> robots;
  std::vector<RobotCommand> commands;
  BodyVelocity velocity;  // applied object velocity
  double residual = 0.0;
  std::vector<std::string> events;
};

struct ExecutionLog {
  std::string method = "kghs";
  std::uint64_t seed = 0;
  double c = 1.0;
  double dt = 1.0 / 240.0;
  SE2State goal;
  std::vector<LogRecord> records;
  std::vector<HybridPlan> plans;  // initial plan then one per replan
  bool success = false;
  std::string reason;             // failure reason, empty on success
  int replans = 0;
  int executed_switches = 0;
  double planning_seconds = 0.0;  // wall clock, not part of the serialized log
};

struct Metrics {
  double SR = 0.0;  // success
  double TE = 0.0;  // mean weighted tracking error
  double CC = 0.0;  // sum of squared robot speeds times dt
  double SM = 0.0;  // mean weighted velocity change per step
  double PT = 0.0;  // s, wall clock
  double ET = 0.0;  // s, simulated
  double EE = 0.0;  // final weighted distance to goal
};

Metrics metrics(const ExecutionLog& log);

struct EpisodeInputs {
  const ObjectIntrinsics* intr = nullptr;
  const Workspace* ws = nullptr;
  SE2State goal;
  /// Replans from the given pose; may throw NoGuidingPath or NoFeasiblePlan.
  std::function<HybridPlan(const SE2State&)> planner;
};

/// Closed-loop execution of `plan` with replanning on the configured triggers.
ExecutionLog run_episode(const EpisodeInputs& in, const HybridPlan& plan, const TrackerConfig& tracker,
                         const SimConfig& sim, const DisturbanceConfig& dist, const ReplanConfig& replan);

/// Robots placed on the slots of `mode` with the object at `object`.
std::vector<SE2State> spawn_robots(const InteractionMode& mode, const SE2State& object, double robot_radius);

}  // namespace pushcraft
