#pragma once

#include <vector>

#include "pushcraft/geometry.hpp"
#include "pushcraft/statics.hpp"

namespace pushcraft {

inline constexpr double kEpsOmega = 1e-8;
inline constexpr double kNominalSpeed = 0.5;

/// Constant body-velocity motion from `start`.
struct ArcTransition {
  SE2State start;
  BodyVelocity velocity;  // body frame, actual rate
  double duration = 0.0;  // s
  double delta_psi = 0.0; // wrap(omega * duration)

  SE2State end() const;
  SE2State at(double t) const;
  /// Direction of the velocity with unit weighted norm.
  BodyVelocity direction(double c) const;
};

/// End state after moving with body velocity p for tbar seconds.
SE2State roll_arc(const SE2State& s0, const BodyVelocity& p, double tbar);

struct ArcRollout {
  SE2State end;
  std::vector<SE2State> samples;  // includes both endpoints
};
ArcRollout roll_arc(const SE2State& s0, const BodyVelocity& p, double tbar, int n_samples);

/// The unique arc with heading change in [-pi, pi) joining s0 and sg.
/// The duration is chosen so that max(|v|, c|omega|) equals nominal_speed.
ArcTransition connect_arc(const SE2State& s0, const SE2State& sg, double c, double nominal_speed = kNominalSpeed);

/// Generalised length |(vx, vy, c omega)| * duration.
double arc_length(const ArcTransition& arc, double c);

/// States along the arc with weighted spacing at most `max_spacing`
/// (both endpoints included).
std::vector<SE2State> sample_arc(const ArcTransition& arc, double c, double max_spacing);

/// Multi-directional feasibility of the arc direction times its length.
double arc_loss(const InteractionMode& mode, const ArcTransition& arc, const ObjectIntrinsics& intr,
                const DirectionWeights& weights = kDefaultWeights);

/// True when no sampled pose of the arc collides.
bool arc_collision_free(const ArcTransition& arc, const Shape& shape, const Workspace& ws, double c,
                        double max_spacing);

}  // namespace pushcraft
