#pragma once

#include <vector>

#include "pushcraft/geometry.hpp"
#include "pushcraft/statics.hpp"

namespace pushcraft {

/// Motion of one robot along the object boundary, in arclength fractions.
/// `delta` is signed: positive runs counter-clockwise (increasing t).
struct BoundaryPath {
  double from = 0.0;
  double to = 0.0;
  double delta = 0.0;

  double length_fraction() const { return std::abs(delta); }
  /// Boundary fraction reached after moving `s` (fraction units) along the path.
  double at(double s) const;
};

struct SwitchAssignment {
  std::vector<int> target;          // robot i (old point i) -> index into new points
  std::vector<BoundaryPath> paths;  // per robot
  double theta_star = 0.0;          // diameter angle, rad in [0, pi)
  bool balanced = true;             // false: cyclic-shift fallback was used

  double max_fraction() const;
};

/// Circle-mapping reassignment. Old and new points are boundary fractions
/// in [0, 1); the sizes must match.
SwitchAssignment assign_switch(const std::vector<double>& old_t, const std::vector<double>& new_t);

/// Convenience overload on modes (uses the contacts' boundary fractions).
SwitchAssignment assign_switch(const InteractionMode& from, const InteractionMode& to);

/// True when two robots moving simultaneously at equal speed along their
/// paths ever meet or pass each other.
bool paths_cross(const std::vector<BoundaryPath>& paths);

/// Body-frame waypoints of a boundary path offset outward by `offset`,
/// with rounded corners at convex vertices.
std::vector<Vec2> boundary_waypoints(const Polygon& outline, const BoundaryPath& path, double offset,
                                     double spacing);

}  // namespace pushcraft
