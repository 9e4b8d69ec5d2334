#include "pushcraft/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pushcraft {

const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::POCB: return "pocb";
    case BaselineKind::IAB: return "iab";
    case BaselineKind::SDF: return "sdf";
    case BaselineKind::AUS: return "aus";
  }
  return "?";
}

std::optional<BaselineKind> parse_baseline(std::string_view s) {
  for (auto k : {BaselineKind::POCB, BaselineKind::IAB, BaselineKind::SDF, BaselineKind::AUS}) {
    if (s == baseline_name(k)) return k;
  }
  return std::nullopt;
}

std::vector<double> contact_angles(const CandidateSet& cands, const SE2State& object, const Vec2& goal_dir) {
  std::vector<double> out;
  out.reserve(cands.points.size());
  for (const auto& cp : cands.points) {
    const Vec2 n = rotate(cp.normal, object.psi);
    out.push_back(std::atan2(goal_dir.cross(n), goal_dir.dot(n)));
  }
  return out;
}

std::vector<double> selection_probabilities(const std::vector<double>& angles, BaselineKind kind) {
  const double half = std::numbers::pi / 2;
  std::vector<double> w(angles.size(), 0.0);
  size_t admissible = 0;
  for (size_t i = 0; i < angles.size(); ++i) {
    if (std::abs(angles[i]) > half) continue;
    ++admissible;
    w[i] = kind == BaselineKind::IAB ? 1.0 - std::abs(angles[i]) / half : 1.0;
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  if (sum <= 0.0 && admissible > 0) {
    // every admissible contact sits exactly at the boundary angle
    for (size_t i = 0; i < angles.size(); ++i) w[i] = std::abs(angles[i]) <= half ? 1.0 : 0.0;
    sum = static_cast<double>(admissible);
  }
  if (sum <= 0.0) {
    // nothing faces the goal
    w.assign(angles.size(), 1.0);
    sum = static_cast<double>(angles.size());
  }
  for (double& x : w) x /= sum;
  return w;
}

InteractionMode select_contacts(const CandidateSet& cands, const std::vector<double>& prob, int n_robots,
                                double perimeter, double robot_radius, std::mt19937_64& rng) {
  InteractionMode mode;
  std::vector<bool> used(cands.points.size(), false);
  auto draw = [&](std::vector<double> w) -> std::optional<size_t> {
    double sum = 0.0;
    for (double x : w) sum += x;
    if (sum <= 0.0) return std::nullopt;
    std::discrete_distribution<size_t> d(w.begin(), w.end());
    return d(rng);
  };
  for (int k = 0; k < n_robots; ++k) {
    std::vector<double> spaced(prob.size(), 0.0), any(prob.size(), 0.0), rest(prob.size(), 0.0);
    for (size_t i = 0; i < prob.size(); ++i) {
      if (used[i]) continue;
      bool ok = true;
      for (const auto& cp : mode.contacts) ok = ok && contacts_spaced(cp, cands.points[i], perimeter, robot_radius);
      spaced[i] = ok ? prob[i] : 0.0;
      any[i] = prob[i];
      rest[i] = ok ? 1.0 : 0.0;
    }
    auto pick = draw(spaced);
    if (!pick) pick = draw(any);
    if (!pick) pick = draw(rest);
    if (!pick) break;
    used[*pick] = true;
    mode.contacts.push_back(cands.points[*pick]);
  }
  return mode;
}

BodyVelocity fixed_push_velocity(const InteractionMode& mode, double f, const ObjectIntrinsics& intr, double speed) {
  double fx = 0.0, fy = 0.0, m = 0.0;
  for (const auto& cp : mode.contacts) {
    fx += f * cp.normal.x;
    fy += f * cp.normal.y;
    m += f * cp.position.cross(cp.normal);
  }
  // the ellipsoidal limit surface maps a wrench w to velocity (wx, wy, wm / c^2)
  const double c = intr.c();
  const BodyVelocity p{fx, fy, m / (c * c)};
  const double n = p.weighted_norm(c);
  if (n < 1e-12) return {};
  return p * (speed / n);
}

HybridPlan aus_plan(const GuidingPath& path, const SearchConfig& cfg, ModeLibrary& modes, const Workspace& ws,
                    const SufficiencyReport& witness, int max_doublings) {
  const ObjectIntrinsics& intr = modes.intrinsics();
  const double c = intr.c();
  const double perimeter = intr.shape.outline.perimeter();
  const PathCurve curve(path.states, c);
  const auto& weights = modes.config().weights;

  for (int d = 0; d <= max_doublings; ++d) {
    const int L = 1 << d;
    std::vector<SE2State> pts;
    for (int k = 0; k <= L; ++k) {
      pts.push_back(k == 0 ? path.states.front() : k == L ? path.states.back() : curve.state_at(curve.length() * k / L));
    }
    bool ok = true;
    for (int k = 0; k < L && ok; ++k) {
      if (se2_distance(pts[k], pts[k + 1], c) < 1e-12) continue;
      ok = arc_collision_free(connect_arc(pts[k], pts[k + 1], c), intr.shape, ws, c, cfg.sweep_spacing);
    }
    if (!ok) continue;

    HybridPlan plan;
    auto push = [&](const SE2State& s, const InteractionMode& m, double sigma, bool sata_piece, double loss) {
      double cost = loss;
      if (!plan.keyframes.empty()) cost += cfg.w_t * switch_time(*plan.keyframes.back().mode, m, perimeter, cfg.robot_speed);
      plan.keyframes.push_back({s, m, sigma, sata_piece});
      plan.segment_costs.push_back(cost);
      plan.assigned_cost += cost;
    };
    for (int k = 0; k < L && ok; ++k) {
      if (se2_distance(pts[k], pts[k + 1], c) < 1e-12) continue;
      const ArcTransition arc = connect_arc(pts[k], pts[k + 1], c);
      const double sigma = curve.length() * k / L;
      const auto& entry = modes.get(arc.velocity);
      const InteractionMode* best = nullptr;
      double best_cost = std::numeric_limits<double>::infinity(), best_loss = 0.0;
      for (const auto& m : entry.modes) {
        if (!velocity_allowed(m, arc.velocity, intr)) continue;
        const double loss = arc_loss(m, arc, intr, weights);
        double cost = loss;
        if (!plan.keyframes.empty()) cost += cfg.w_t * switch_time(*plan.keyframes.back().mode, m, perimeter, cfg.robot_speed);
        if (cost < best_cost) best_cost = cost, best = &m, best_loss = loss;
      }
      if (best) {
        push(pts[k], *best, sigma, false, best_loss);
        continue;
      }
      SataResult res;
      try {
        res = sata(arc, cfg.e_sata, witness, intr, cfg.sata_spacing);
      } catch (const std::runtime_error&) {
        throw NoFeasiblePlan();
      }
      for (const auto& pc : res.pieces) ok = ok && arc_collision_free(pc.arc, intr.shape, ws, c, cfg.sweep_spacing);
      for (size_t i = 0; i < res.pieces.size() && ok; ++i) {
        const auto& pc = res.pieces[i];
        push(i == 0 ? pts[k] : pc.arc.start, pc.mode, sigma, true, arc_loss(pc.mode, pc.arc, intr, weights));
      }
    }
    if (!ok) continue;
    plan.keyframes.push_back({pts.back(), std::nullopt, curve.length(), false});
    return plan;
  }
  throw NoFeasiblePlan();
}

namespace {

DirectionWeights single_direction(const DirectionWeights& w) { return {w[0], 0, 0, 0, 0, 0}; }

}  // namespace

BaselineRunner::BaselineRunner(BaselineKind kind, const Scenario& sc, const BaselineConfig& cfg)
    : kind_(kind), cfg_(cfg) {
  if (kind == BaselineKind::SDF) pipe_ = std::make_unique<Pipeline>(sc, single_direction(sc.modegen.weights));
  else pipe_ = std::make_unique<Pipeline>(sc);
  const auto t0 = std::chrono::steady_clock::now();
  if (kind == BaselineKind::POCB || kind == BaselineKind::IAB) {
    LatticeConfig lc = pipe_->scenario().lattice;
    lc.loss_weight = 0.0;
    path_ = find_guiding_path(sc.start, sc.goal, pipe_->workspace_for(sc.start), pipe_->library(), lc);
  } else {
    auto res = plan_from(sc.start);
    path_ = std::move(res.path);
    plan_ = std::move(res.plan);
  }
  planning_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PlanResult BaselineRunner::plan_from(const SE2State& from) {
  if (kind_ == BaselineKind::SDF) return pipe_->plan(from);
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario& sc = pipe_->scenario();
  PlanResult out;
  const Workspace w = pipe_->workspace_for(from);
  out.inflation = w.inflation_radius;
  out.path = find_guiding_path(from, sc.goal, w, pipe_->library(), sc.lattice);
  out.plan = aus_plan(out.path, sc.search, pipe_->library(), w, pipe_->witness(), cfg_.max_doublings);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ExecutionLog BaselineRunner::run(const DisturbanceConfig& dist) {
  if (kind_ == BaselineKind::POCB || kind_ == BaselineKind::IAB) return run_contact_based(dist);
  const Scenario& sc = pipe_->scenario();
  EpisodeInputs in{&pipe_->intrinsics(), &pipe_->workspace(), sc.goal,
                   [this](const SE2State& s) { return plan_from(s).plan; }};
  ExecutionLog log = run_episode(in, *plan_, sc.tracker, sc.sim, dist, sc.replan);
  log.method = baseline_name(kind_);
  log.planning_seconds += planning_seconds_;
  return log;
}

ExecutionLog BaselineRunner::run_contact_based(const DisturbanceConfig& dist) {
  const Scenario& sc = pipe_->scenario();
  const ObjectIntrinsics& intr = pipe_->intrinsics();
  const Workspace& ws = pipe_->workspace();
  const CandidateSet& cands = pipe_->library().candidates();
  const double c = intr.c();
  const double dt = 1.0 / sc.sim.rate;
  const double r = sc.robots.radius;
  const double force = std::min(sc.robots.f_push_max, intr.f_max);
  const double perimeter = intr.shape.outline.perimeter();
  const double gap = 0.5 * sc.sim.contact_tolerance;
  std::mt19937_64 rng(dist.seed * 0x9e3779b97f4a7c15ULL + 1);

  // intermediate goals along the A* path, and its dense samples as the tracking reference
  std::vector<Vec2> subgoals;
  std::vector<SE2State> reference{path_.states.front()};
  for (size_t i = 1; i < path_.states.size(); ++i) {
    const auto s = sample_arc(connect_arc(path_.states[i - 1], path_.states[i], c), c, sc.sim.reference_spacing);
    reference.insert(reference.end(), s.begin() + 1, s.end());
  }
  double acc = 0.0;
  for (size_t i = 1; i < path_.states.size(); ++i) {
    acc += (path_.states[i].position() - path_.states[i - 1].position()).norm();
    if (acc >= cfg_.subgoal_spacing) subgoals.push_back(path_.states[i].position()), acc = 0.0;
  }
  if (subgoals.empty() || (subgoals.back() - sc.goal.position()).norm() > 1e-9) subgoals.push_back(sc.goal.position());

  ExecutionLog log;
  log.method = baseline_name(kind_);
  log.seed = dist.seed;
  log.c = c;
  log.dt = dt;
  log.goal = sc.goal;
  log.planning_seconds = planning_seconds_;

  Simulator sim(intr, sc.sim, dist);
  SimState s;
  s.object = sc.start;
  size_t g = 0;
  auto goal_dir = [&] {
    const Vec2 d = subgoals[g] - s.object.position();
    const double n = d.norm();
    return n > 1e-9 ? d / n : Vec2{1, 0};
  };
  auto choose = [&] {
    const auto prob = selection_probabilities(contact_angles(cands, s.object, goal_dir()), kind_);
    return select_contacts(cands, prob, sc.robots.count, perimeter, r, rng);
  };
  s.mode = choose();
  s.robots = spawn_robots(s.mode, s.object, r);
  s.in_contact.assign(s.robots.size(), true);

  Phase phase = Phase::Push;
  SwitchMotion pending;
  double selected_at = 0.0;
  const long long max_steps = static_cast<long long>(std::ceil(sc.sim.timeout * sc.sim.rate));
  std::vector<std::string> events;
  for (long long k = 0;; ++k) {
    events.clear();
    if (k >= max_steps) {
      log.reason = "timeout";
      break;
    }
    bool advanced = false;
    while (g + 1 < subgoals.size() && (subgoals[g] - s.object.position()).norm() < cfg_.subgoal_reach) {
      ++g;
      advanced = true;
    }
    const Vec2 dir = goal_dir();
    if (phase == Phase::Push) {
      bool reselect = advanced || s.clock - selected_at >= cfg_.reselect_period;
      for (size_t i = 0; i < s.mode.size(); ++i) {
        if (!s.in_contact[i]) reselect = true;
        if (rotate(s.mode.contacts[i].normal, s.object.psi).dot(dir) < 0.0) reselect = true;
      }
      if (reselect) {
        pending = plan_switch(s, choose(), intr, r, gap);
        std::fill(s.in_contact.begin(), s.in_contact.end(), false);
        phase = Phase::Switch;
        selected_at = s.clock;
        events.push_back("reselect");
      }
    }

    std::vector<RobotCommand> commands(s.robots.size());
    if (phase == Phase::Switch && switch_commands(pending, s.robots, sc.robots.max_speed, dt, commands)) {
      s.mode = pending.aligned;
      s.robots = spawn_robots(s.mode, s.object, r);
      std::fill(s.in_contact.begin(), s.in_contact.end(), true);
      std::fill(commands.begin(), commands.end(), RobotCommand{});
      phase = Phase::Push;
      ++log.executed_switches;
      events.push_back("switch_done");
    } else if (phase == Phase::Push) {
      const BodyVelocity p = fixed_push_velocity(s.mode, force, intr, cfg_.push_speed);
      const Vec2 v = rotate({p.vx, p.vy}, s.object.psi);
      for (size_t i = 0; i < s.robots.size(); ++i) {
        const SE2State slot = robot_slot(s.mode.contacts[i], s.object, r);
        const Vec2 arm = s.object.transform(s.mode.contacts[i].position) - s.object.position();
        Vec2 cmd = v + arm.perp() * p.omega + (slot.position() - s.robots[i].position()) * sc.tracker.K_v;
        const double n = cmd.norm();
        if (n > sc.robots.max_speed) cmd = cmd * (sc.robots.max_speed / n);
        commands[i] = {cmd, p.omega};
      }
    }

    LogRecord rec;
    rec.t = s.clock;
    rec.phase = phase;
    rec.segment = g;
    rec.object = s.object;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : reference) {
      const double d = se2_distance(x, s.object, c);
      if (d < best) best = d, rec.reference = x;
    }
    rec.robots = s.robots;
    rec.commands = commands;

    const StepOutcome so = sim.step(s, commands, dt);
    if (phase == Phase::Switch) std::fill(s.in_contact.begin(), s.in_contact.end(), false);
    if (so.broken) events.push_back("contact_broken");
    rec.velocity = so.applied;

    bool finished = false;
    if (clearance(intr.shape, s.object, ws) <= 0.0) {
      events.push_back("collision");
      log.reason = "collision";
      finished = true;
    } else if ((s.object.position() - sc.goal.position()).norm() <= sc.sim.goal_tolerance) {
      log.success = true;
      events.push_back("goal");
      finished = true;
    }
    rec.events = events;
    log.records.push_back(std::move(rec));
    if (finished) break;
  }
  LogRecord last;
  last.t = s.clock;
  last.phase = phase;
  last.segment = g;
  last.object = s.object;
  last.reference = log.records.empty() ? s.object : log.records.back().reference;
  last.robots = s.robots;
  last.commands.assign(s.robots.size(), RobotCommand{});
  last.velocity = log.records.empty() ? BodyVelocity{} : log.records.back().velocity;
  last.events = {log.success ? "end:success" : "end:" + log.reason};
  log.records.push_back(std::move(last));
  return log;
}

ExecutionLog run_baseline(BaselineKind kind, const Scenario& sc, const BaselineConfig& cfg) {
  BaselineRunner runner(kind, sc, cfg);
  return runner.run(sc.disturbance);
}

}  // namespace pushcraft
