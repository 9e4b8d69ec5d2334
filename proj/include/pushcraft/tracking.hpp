#pragma once

#include <vector>

#include "pushcraft/arcs.hpp"
#include "pushcraft/geometry.hpp"
#include "pushcraft/statics.hpp"

namespace pushcraft {

struct TrackerConfig {
  int horizon = 20;               // steps
  double dt = 0.1;                // s
  double w_I = 1e4;               // smoothness weight on velocity changes
  double K_v = 2.0;               // 1/s
  double K_psi = 2.0;             // 1/s
  double optimizer_hz = 10.0;
  double reference_hz = 1.0;
  int max_sweeps = 20;
  double tol = 1e-6;              // objective change that ends the sweeps
  double damping = 0.5;           // step toward the force-consistent direction
  double clearance_margin = 0.0;  // m beyond the inflation radius
  double clearance_weight = 1e4;
  double max_speed = 1.0;         // weighted body speed limit of the object
  double robot_max_speed = 1.0;   // m/s
  double robot_max_omega = 4.0;   // rad/s
};

enum class TrackStatus { Converged, NotConverged };

/// states[0] is the current pose; states[t+1] = roll_arc(states[t], velocities[t], dt).
struct RefinedTrajectory {
  std::vector<SE2State> states;
  std::vector<BodyVelocity> velocities;
  std::vector<double> residuals;          // J_F per step
  std::vector<double> objective_history;  // one entry per accepted sweep (plus the start)
  double dt = 0.1;
  TrackStatus status = TrackStatus::Converged;

  double duration() const { return dt * velocities.size(); }
  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
  double total_residual() const;
  SE2State state_at(double t) const;
  BodyVelocity velocity_at(double t) const;
};

/// Horizon problem: feasibility residual plus w_I |delta p|^2 plus a
/// clearance penalty, endpoint pinned to `local_goal`. `previous` (optional)
/// is the velocity applied before this solve; it enters the first
/// smoothness term.
RefinedTrajectory refine_trajectory(const SE2State& current, const SE2State& local_goal, const InteractionMode& mode,
                                    const ObjectIntrinsics& intr, const Workspace& ws, const TrackerConfig& cfg,
                                    const BodyVelocity* previous = nullptr);

/// Objective of a velocity sequence, as minimised by refine_trajectory.
double tracking_objective(const SE2State& current, const std::vector<BodyVelocity>& p, const InteractionMode& mode,
                          const ObjectIntrinsics& intr, const Workspace& ws, const TrackerConfig& cfg,
                          const BodyVelocity* previous = nullptr);

struct RobotCommand {
  Vec2 v;             // world frame, m/s
  double omega = 0.0; // rad/s
};

/// P-law on the contact error plus feed-forward of the contact point
/// velocity at time t along the refined trajectory. Robot i serves contact i.
std::vector<RobotCommand> robot_commands(const RefinedTrajectory& refined, double t, const InteractionMode& mode,
                                         const std::vector<SE2State>& robots, double robot_radius,
                                         const TrackerConfig& cfg);

/// World pose a robot should hold to serve `cp` with the object at `object`.
SE2State robot_slot(const ContactPoint& cp, const SE2State& object, double robot_radius);

/// Index of the farthest reference state (at or after `from`) within
/// weighted distance `reach` of `current`; `from` when none qualifies.
size_t local_goal_index(const std::vector<SE2State>& reference, size_t from, const SE2State& current, double reach,
                        double c);

}  // namespace pushcraft
