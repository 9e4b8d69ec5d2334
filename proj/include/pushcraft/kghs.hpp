#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "pushcraft/guidance.hpp"
#include "pushcraft/modegen.hpp"

namespace pushcraft {

/// Guiding path as a continuous curve parameterised by generalised arc length.
class PathCurve {
 public:
  PathCurve(std::vector<SE2State> states, double c);

  double length() const { return cum_.back(); }
  SE2State state_at(double sigma) const;
  /// World-frame unit direction of travel at sigma (x, y only).
  Vec2 tangent_at(double sigma) const;
  const std::vector<SE2State>& states() const { return states_; }
  const std::vector<double>& vertex_sigma() const { return cum_; }
  double c() const { return c_; }

 private:
  std::vector<SE2State> states_;
  std::vector<ArcTransition> arcs_;
  std::vector<double> cum_;
  double c_;
};

struct Keyframe {
  SE2State state;
  std::optional<InteractionMode> mode;  // mode of the segment that starts here
  double sigma = 0.0;                   // position along the guiding path
  bool from_sata = false;
};

struct SearchConfig {
  double alpha_min = 0.1;
  double w_t = 10.0;
  int W_k = 4;                   // perturbed siblings per split
  double e_sata = 0.02;
  double sata_spacing = 0.005;   // Hausdorff sampling
  double sweep_spacing = 0.05;   // swept collision checks
  double robot_speed = 0.5;      // for switch-time estimates
  double xy_step = 0.2;          // perturbation scales
  double psi_step = std::numbers::pi / 12;
  double heuristic_floor = 1.0;  // per unit generalised length
  size_t max_nodes = 20000;
  double max_seconds = 60.0;
};

struct SearchStats {
  size_t expansions = 0;
  size_t generated = 0;
  size_t depth_capped = 0;
  std::vector<double> incumbents;  // costs in the order found
  bool budget_hit = false;
  double seconds = 0.0;
};

struct HybridPlan {
  std::vector<Keyframe> keyframes;
  std::vector<double> segment_costs;  // loss plus weighted switch time into the segment
  double assigned_cost = 0.0;
  double heuristic = 0.0;
  SearchStats stats;

  size_t segments() const { return keyframes.empty() ? 0 : keyframes.size() - 1; }
  ArcTransition arc(size_t i, double c) const;
  /// Number of changes of mode between consecutive segments.
  int mode_switches() const;
  /// Distinct modes used.
  int mode_count() const;
};

class NoFeasiblePlan : public std::runtime_error {
 public:
  NoFeasiblePlan() : std::runtime_error("no feasible plan") {}
};

/// Time for the robots to move from mode a to mode b along the boundary.
double switch_time(const InteractionMode& a, const InteractionMode& b, double perimeter, double robot_speed);

struct SplitChoice {
  SE2State state;
  double sigma = 0.0;
  double clearance = 0.0;  // min clearance of the two induced arcs
};

/// Split state on the guiding path between a (at sigma_a) and b (at sigma_b):
/// among states whose distances to a and b are both above or both below
/// alpha_min, the one maximising the clearance of the two new arcs.
SplitChoice select_split(const PathCurve& curve, const SE2State& a, double sigma_a, const SE2State& b,
                         double sigma_b, const Shape& shape, const Workspace& ws, const SearchConfig& cfg);

/// Best-first search over keyframe decompositions of the guiding path.
/// Mode generation, weights and W_xi come from the library configuration.
HybridPlan kghs_search(const GuidingPath& path, const SearchConfig& cfg, ModeLibrary& modes, const Workspace& ws,
                       const SufficiencyReport& witness);

}  // namespace pushcraft
