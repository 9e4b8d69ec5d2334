#include "pushcraft/arcs.hpp"

#include <algorithm>
#include <stdexcept>

namespace pushcraft {

namespace {

constexpr double kPi = std::numbers::pi;

// S = sin(th)/th and C = (1 - cos(th))/th, with series near zero.
void arc_factors(double th, double& S, double& C) {
  if (std::abs(th) <= kEpsOmega) {
    S = 1.0;
    C = 0.0;
  } else if (std::abs(th) < 1e-3) {
    const double t2 = th * th;
    S = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    C = th * (0.5 - t2 / 24.0 + t2 * t2 / 720.0);
  } else {
    S = std::sin(th) / th;
    C = (1.0 - std::cos(th)) / th;
  }
}

}  // namespace

SE2State roll_arc(const SE2State& s0, const BodyVelocity& p, double tbar) {
  const double th = p.omega * tbar;
  double S, C;
  arc_factors(th, S, C);
  const Vec2 body{(S * p.vx - C * p.vy) * tbar, (C * p.vx + S * p.vy) * tbar};
  const Vec2 d = rotate(body, s0.psi);
  return {s0.x + d.x, s0.y + d.y, s0.psi + th};
}

ArcRollout roll_arc(const SE2State& s0, const BodyVelocity& p, double tbar, int n_samples) {
  if (!(tbar > 0)) throw std::invalid_argument("arc duration must be positive");
  ArcRollout out;
  n_samples = std::max(n_samples, 2);
  out.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    out.samples.push_back(roll_arc(s0, p, tbar * i / (n_samples - 1)));
  }
  out.end = out.samples.back();
  return out;
}

SE2State ArcTransition::end() const { return roll_arc(start, velocity, duration); }

SE2State ArcTransition::at(double t) const { return roll_arc(start, velocity, std::clamp(t, 0.0, duration)); }

BodyVelocity ArcTransition::direction(double c) const {
  const double n = velocity.weighted_norm(c);
  return n > 0 ? velocity * (1.0 / n) : velocity;
}

ArcTransition connect_arc(const SE2State& s0, const SE2State& sg, double c, double nominal_speed) {
  double dpsi = wrap_angle(sg.psi - s0.psi);
  if (dpsi <= -kPi) dpsi = -kPi + 1e-9;
  const Vec2 d = rotate(Vec2{sg.x - s0.x, sg.y - s0.y}, -s0.psi);
  double S, C;
  arc_factors(dpsi, S, C);
  const double det = S * S + C * C;
  const Vec2 g{(S * d.x + C * d.y) / det, (-C * d.x + S * d.y) / det};

  const double span = std::max(g.norm(), c * std::abs(dpsi));
  if (span <= 0.0) throw std::invalid_argument("cannot connect identical states");
  ArcTransition arc;
  arc.start = s0;
  arc.duration = span / nominal_speed;
  arc.velocity = {g.x / arc.duration, g.y / arc.duration, dpsi / arc.duration};
  arc.delta_psi = dpsi;
  return arc;
}

double arc_length(const ArcTransition& arc, double c) { return arc.velocity.weighted_norm(c) * arc.duration; }

std::vector<SE2State> sample_arc(const ArcTransition& arc, double c, double max_spacing) {
  const double len = arc_length(arc, c);
  // chord spacing never exceeds the arc-length spacing
  const int n = std::max(2, static_cast<int>(std::ceil(len / max_spacing)) + 1);
  std::vector<SE2State> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(roll_arc(arc.start, arc.velocity, arc.duration * i / (n - 1)));
  return out;
}

double arc_loss(const InteractionMode& mode, const ArcTransition& arc, const ObjectIntrinsics& intr,
                const DirectionWeights& weights) {
  return multi_feasibility(mode, arc.velocity, intr, weights) * arc_length(arc, intr.c());
}

bool arc_collision_free(const ArcTransition& arc, const Shape& shape, const Workspace& ws, double c,
                        double max_spacing) {
  for (const auto& s : sample_arc(arc, c, max_spacing)) {
    if (collides(shape, s, ws)) return false;
  }
  return true;
}

}  // namespace pushcraft
