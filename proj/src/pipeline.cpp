#include "pushcraft/pipeline.hpp"

#include <chrono>

namespace pushcraft {

Pipeline::Pipeline(const Scenario& sc) : Pipeline(sc, sc.modegen.weights) {}

Pipeline::Pipeline(const Scenario& sc, const DirectionWeights& weights) : sc_(sc) {
  sc_.modegen.weights = weights;
  sc_.modegen.n_robots = sc_.robots.count;
  sc_.modegen.robot_radius = sc_.robots.radius;
  sc_.modegen.seed = sc_.seed;
  sc_.tracker.robot_max_speed = sc_.robots.max_speed;
  sc_.tracker.robot_max_omega = sc_.robots.max_omega;
  sc_.sim.robot_radius = sc_.robots.radius;
  intr_ = make_intrinsics(sc_.object, sc_.mass, sc_.mu_ground, sc_.mu_contact);
  auto cands = candidate_contacts(intr_, sc_.robots.radius, sc_.segment_len, sc_.robots.f_push_max);
  witness_ = check_sufficient(cands, intr_, sc_.modegen);
  lib_ = std::make_unique<ModeLibrary>(intr_, std::move(cands), sc_.modegen);
}

Workspace Pipeline::workspace_for(const SE2State& from) const {
  Workspace w = sc_.workspace;
  while (collides(intr_.shape, from, w)) {
    const double next = w.inflation_radius * 0.8;
    if (next < sc_.min_inflation) throw NoGuidingPath("start pose collides");
    w.inflation_radius = next;
    w.rebuild();
  }
  return w;
}

PlanResult Pipeline::plan(const SE2State& from) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult out;
  const Workspace w = workspace_for(from);
  out.inflation = w.inflation_radius;
  out.path = find_guiding_path(from, sc_.goal, w, *lib_, sc_.lattice);
  out.plan = kghs_search(out.path, sc_.search, *lib_, w, witness_);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EpisodeInputs Pipeline::episode_inputs() {
  return {&intr_, &sc_.workspace, sc_.goal, [this](const SE2State& s) { return plan(s).plan; }};
}

}  // namespace pushcraft
