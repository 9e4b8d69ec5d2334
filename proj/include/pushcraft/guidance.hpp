#pragma once

#include <stdexcept>
#include <vector>

#include "pushcraft/arcs.hpp"
#include "pushcraft/modegen.hpp"

namespace pushcraft {

struct Motion {
  int dx = 0;    // lattice cells, world frame
  int dy = 0;
  int dpsi = 0;  // heading steps
};

struct LatticeConfig {
  double xy_step = 0.2;
  double psi_step = std::numbers::pi / 12;
  double sweep_spacing = 0.05;  // arc sampling for swept collision checks
  double loss_weight = 1.0;     // 0 drops the feasibility term
  bool use_heuristic = true;    // false: Dijkstra
  std::vector<Motion> motions = default_motions();

  /// 8 translations x {-1, 0, +1} heading steps, plus the two in-place turns.
  static std::vector<Motion> default_motions();
};

struct GuidingPath {
  std::vector<SE2State> states;
  std::vector<double> edge_costs;
  double cost = 0.0;
  size_t expansions = 0;
};

class NoGuidingPath : public std::runtime_error {
 public:
  explicit NoGuidingPath(const std::string& why) : std::runtime_error("no guiding path: " + why) {}
};

/// Cost of one lattice edge: weighted chord plus the best mode's
/// multi-directional feasibility times the arc length.
double edge_cost(const ArcTransition& arc, ModeLibrary& modes, const LatticeConfig& cfg);

/// Fills the library with every body-relative direction the lattice can
/// produce (all headings times all motions).
void precompute_edge_losses(ModeLibrary& modes, const LatticeConfig& cfg);

GuidingPath find_guiding_path(const SE2State& start, const SE2State& goal, const Workspace& ws,
                              ModeLibrary& modes, const LatticeConfig& cfg);

}  // namespace pushcraft
