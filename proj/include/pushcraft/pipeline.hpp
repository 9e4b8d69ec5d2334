#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "pushcraft/guidance.hpp"
#include "pushcraft/kghs.hpp"
#include "pushcraft/sim.hpp"

namespace pushcraft {

struct RobotTeam {
  int count = 3;
  double radius = 0.125;
  double f_push_max = 30.0;  // N
  double max_speed = 1.0;    // m/s
  double max_omega = 4.0;    // rad/s
};

/// Everything one planning-and-execution instance needs, in SI units.
struct Scenario {
  std::string name;
  Workspace workspace;
  Polygon object;
  double mass = 10.0;
  double mu_ground = 0.5;
  double mu_contact = 0.2;
  RobotTeam robots;
  SE2State start, goal;

  double segment_len = 0.25;  // candidate contact spacing
  double min_inflation = 0.01;
  std::uint64_t seed = 1;
  ModeGenConfig modegen;
  LatticeConfig lattice;
  SearchConfig search;
  TrackerConfig tracker;
  SimConfig sim;
  ReplanConfig replan;
  DisturbanceConfig disturbance;
};

struct PlanResult {
  GuidingPath path;
  HybridPlan plan;
  double seconds = 0.0;  // wall clock, guidance plus search
  double inflation = 0.0;
};

/// Derived planning state for one scenario. Not copyable: the mode library
/// refers to the intrinsics held here.
class Pipeline {
 public:
  explicit Pipeline(const Scenario& sc);
  /// Same scenario with the multi-directional weights replaced.
  Pipeline(const Scenario& sc, const DirectionWeights& weights);
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const Scenario& scenario() const { return sc_; }
  const ObjectIntrinsics& intrinsics() const { return intr_; }
  const Workspace& workspace() const { return sc_.workspace; }
  ModeLibrary& library() { return *lib_; }
  const SufficiencyReport& witness() const { return witness_; }

  /// Guiding path plus KG-HS from `from`. When `from` collides with the
  /// inflated workspace the inflation shrinks by 0.8x steps down to
  /// min_inflation.
  PlanResult plan(const SE2State& from);
  PlanResult plan() { return plan(sc_.start); }

  /// Workspace whose inflation admits `from`; throws NoGuidingPath if none.
  Workspace workspace_for(const SE2State& from) const;

  EpisodeInputs episode_inputs();

 private:
  Scenario sc_;
  ObjectIntrinsics intr_;
  std::unique_ptr<ModeLibrary> lib_;
  SufficiencyReport witness_;
};

}  // namespace pushcraft
