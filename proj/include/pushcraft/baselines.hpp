#pragma once

#include <optional>
#include <random>
#include <string_view>

#include "pushcraft/pipeline.hpp"

namespace pushcraft {

enum class BaselineKind { POCB, IAB, SDF, AUS };

const char* baseline_name(BaselineKind k);
std::optional<BaselineKind> parse_baseline(std::string_view s);

struct BaselineConfig {
  double subgoal_spacing = 0.6;   // m between intermediate goals on the A* path
  double subgoal_reach = 0.3;     // m; the next intermediate goal is taken inside this radius
  double push_speed = 0.5;        // weighted object speed the fixed push produces
  double reselect_period = 3.0;   // s between forced contact reselections
  int max_doublings = 10;         // AUS: L up to 2^max_doublings
};

/// Angle between the goal direction and the inward normal of each candidate
/// at `object`, wrapped to [-pi, pi].
std::vector<double> contact_angles(const CandidateSet& cands, const SE2State& object, const Vec2& goal_dir);

/// Selection probabilities over candidates: zero where |angle| > pi/2,
/// uniform over the rest (POCB) or proportional to 1 - |angle|/(pi/2) (IAB).
/// Uniform over all candidates when none faces the goal.
std::vector<double> selection_probabilities(const std::vector<double>& angles, BaselineKind kind);

/// Draws one contact per robot from the probabilities, keeping contacts
/// spaced where possible.
InteractionMode select_contacts(const CandidateSet& cands, const std::vector<double>& prob, int n_robots,
                                double perimeter, double robot_radius, std::mt19937_64& rng);

/// Body velocity produced by pushing with force `f` along each inward normal.
BodyVelocity fixed_push_velocity(const InteractionMode& mode, double f, const ObjectIntrinsics& intr, double speed);

/// Equal segmentation of the guiding path into L arcs, L doubling from 1
/// until every arc (and SATA piece) is collision-free; each segment takes
/// the cheapest allowed mode of the library.
HybridPlan aus_plan(const GuidingPath& path, const SearchConfig& cfg, ModeLibrary& modes, const Workspace& ws,
                    const SufficiencyReport& witness, int max_doublings = 10);

/// One baseline on one scenario; plans (SDF, AUS) or builds the A* path
/// (POCB, IAB) once, then runs any number of episodes.
class BaselineRunner {
 public:
  BaselineRunner(BaselineKind kind, const Scenario& sc, const BaselineConfig& cfg = {});

  ExecutionLog run(const DisturbanceConfig& dist);

  BaselineKind kind() const { return kind_; }
  /// SDF and AUS only.
  const HybridPlan* plan() const { return plan_ ? &*plan_ : nullptr; }
  const GuidingPath& path() const { return path_; }
  double planning_seconds() const { return planning_seconds_; }
  Pipeline& pipeline() { return *pipe_; }

 private:
  ExecutionLog run_contact_based(const DisturbanceConfig& dist);
  PlanResult plan_from(const SE2State& from);

  BaselineKind kind_;
  BaselineConfig cfg_;
  std::unique_ptr<Pipeline> pipe_;
  GuidingPath path_;
  std::optional<HybridPlan> plan_;
  double planning_seconds_ = 0.0;
};

ExecutionLog run_baseline(BaselineKind kind, const Scenario& sc, const BaselineConfig& cfg = {});

}  // namespace pushcraft
