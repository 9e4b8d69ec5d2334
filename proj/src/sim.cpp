#include "pushcraft/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

namespace pushcraft {

namespace {

constexpr double kTouch = 1e-3;       // m; a robot farther than this from the surface does not push
constexpr double kSeparation = 1e-3;  // m/s of normal lag before a touching robot lets go

double surface_gap(const Polygon& outline, const Vec2& b) {
  double d = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < outline.size(); ++e) d = std::min(d, point_segment_distance(b, outline.edge_start(e), outline.edge_end(e)));
  return outline.contains(b) ? 0.0 : d;
}

}  // namespace

const char* phase_name(Phase p) { return p == Phase::Push ? "push" : "switch"; }

Simulator::Simulator(const ObjectIntrinsics& intr, const SimConfig& cfg, const DisturbanceConfig& dist)
    : intr_(intr), cfg_(cfg), dist_(dist), rng_(dist.seed) {}

BodyVelocity Simulator::rigid_inverse(const SE2State& obj, const std::vector<Vec2>& contacts,
                                      const std::vector<Vec2>& normals, const std::vector<Vec2>& contact_vel,
                                      double tangential_weight) {
  if (contacts.empty()) return {};
  Eigen::MatrixXd A(2 * contacts.size(), 3);
  Eigen::VectorXd b(2 * contacts.size());
  for (size_t i = 0; i < contacts.size(); ++i) {
    const Vec2 r = contacts[i] - obj.position();
    const Vec2 n = normals[i], t = normals[i].perp();
    // n . (v + omega x r) = n . u, and the same along the tangent
    A.row(2 * i) << n.x, n.y, r.cross(n);
    A.row(2 * i + 1) << t.x, t.y, r.cross(t);
    b(2 * i) = n.dot(contact_vel[i]);
    b(2 * i + 1) = t.dot(contact_vel[i]);
    A.row(2 * i + 1) *= tangential_weight;
    b(2 * i + 1) *= tangential_weight;
  }
  const Eigen::Vector3d w = A.completeOrthogonalDecomposition().solve(b);
  const Vec2 vb = rotate({w.x(), w.y()}, -obj.psi);
  return {vb.x, vb.y, w.z()};
}

const Simulator::AllowedSet& Simulator::allowed(const InteractionMode& mode) {
  std::vector<long long> key;
  for (const auto& cp : mode.contacts) {
    key.push_back(std::llround(cp.position.x * 1e9));
    key.push_back(std::llround(cp.position.y * 1e9));
  }
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  AllowedSet set;
  const double c = intr_.c();
  const int K = cfg_.projection_samples;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < K; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / K;
    const double rho = std::sqrt(1.0 - z * z);
    const Eigen::Vector3d u(rho * std::cos(golden * k), rho * std::sin(golden * k), z);
    if (velocity_allowed(mode, {u.x(), u.y(), u.z() / c}, intr_)) set.dirs.push_back(u);
  }
  return cache_.emplace(std::move(key), std::move(set)).first->second;
}

BodyVelocity Simulator::project(const InteractionMode& mode, const BodyVelocity& p_des) {
  const double c = intr_.c();
  const Eigen::Vector3d q(p_des.vx, p_des.vy, c * p_des.omega);
  if (q.norm() < 1e-15) return {};
  const Eigen::Vector3d target = q.normalized();
  const auto& set = allowed(mode);
  if (set.dirs.empty()) return {};
  const Eigen::Vector3d* best = &set.dirs.front();
  for (const auto& d : set.dirs) {
    if (d.dot(target) > best->dot(target)) best = &d;
  }
  // bisection along the great circle from the best sample toward the target
  auto to_vel = [c](const Eigen::Vector3d& u) { return BodyVelocity{u.x(), u.y(), u.z() / c}; };
  const double theta = std::acos(std::clamp(best->dot(target), -1.0, 1.0));
  Eigen::Vector3d dir = *best;
  if (theta > 1e-9 && theta < std::numbers::pi - 1e-9) {
    auto slerp = [&](double s) {
      return ((std::sin((1 - s) * theta) * *best + std::sin(s * theta) * target) / std::sin(theta)).eval();
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 24; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (velocity_allowed(mode, to_vel(slerp(mid)), intr_)) lo = mid;
      else hi = mid;
    }
    dir = slerp(lo).normalized();
  }
  const double along = q.dot(dir);
  if (along <= 0.0) return {};
  return to_vel(dir * along);
}

StepOutcome Simulator::step(SimState& s, const std::vector<RobotCommand>& commands, double dt) {
  StepOutcome out;
  const double c = intr_.c();
  const double r = cfg_.robot_radius;
  const Polygon& outline = intr_.shape.outline;

  // touching robots; a robot whose normal speed falls behind the fitted
  // surface motion separates and is dropped from the fit
  std::vector<size_t> idx;
  for (size_t i = 0; i < s.robots.size() && i < s.mode.size() && i < commands.size(); ++i) {
    if (!s.in_contact[i]) continue;
    if (surface_gap(outline, s.object.inverse_transform(s.robots[i].position())) > r + kTouch) continue;
    idx.push_back(i);
  }
  InteractionMode active;
  for (;;) {
    std::vector<Vec2> pts, normals, vels;
    for (size_t i : idx) {
      pts.push_back(s.object.transform(s.mode.contacts[i].position));
      normals.push_back(rotate(s.mode.contacts[i].normal, s.object.psi));
      vels.push_back(commands[i].v);
    }
    out.desired = rigid_inverse(s.object, pts, normals, vels, cfg_.tangential_weight);
    const Vec2 v = rotate({out.desired.vx, out.desired.vy}, s.object.psi);
    size_t worst = idx.size();
    double worst_gap = -kSeparation;
    for (size_t j = 0; j < idx.size(); ++j) {
      const Vec2 surface = v + (pts[j] - s.object.position()).perp() * out.desired.omega;
      const double rel = (vels[j] - surface).dot(normals[j]);
      if (rel < worst_gap) worst_gap = rel, worst = j;
    }
    if (worst == idx.size()) break;
    idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  for (size_t i : idx) active.contacts.push_back(s.mode.contacts[i]);
  if (active.size() > 0 && out.desired.weighted_norm(c) > 1e-12) {
    if (velocity_allowed(active, out.desired, intr_)) {
      out.realized = out.desired;
    } else {
      out.realized = project(active, out.desired);
      out.projected = true;
    }
  }

  out.applied = out.realized;
  if (dist_.rate > 0.0 && dist_.sigma_ratio > 0.0) {
    if (s.clock >= next_noise_) {
      std::normal_distribution<double> N(0.0, 1.0);
      for (int k = 0; k < 3; ++k) noise_(k) = N(rng_);
      next_noise_ += 1.0 / dist_.rate;
      if (next_noise_ <= s.clock) next_noise_ = s.clock + 1.0 / dist_.rate;
    }
    const double sigma = dist_.sigma_ratio * out.realized.weighted_norm(c);
    out.applied = out.realized + BodyVelocity{noise_(0), noise_(1), noise_(2) / c} * sigma;
  }
  if (!out.applied.is_zero()) s.object = roll_arc(s.object, out.applied, dt);

  for (size_t i = 0; i < s.robots.size(); ++i) {
    auto& rb = s.robots[i];
    if (i < commands.size()) {
      rb = {rb.x + commands[i].v.x * dt, rb.y + commands[i].v.y * dt, rb.psi + commands[i].omega * dt};
    }
    // push the disc out of the object
    const Vec2 b = s.object.inverse_transform(rb.position());
    Vec2 nearest = b;
    double d = std::numeric_limits<double>::infinity();
    for (size_t e = 0; e < outline.size(); ++e) {
      const Vec2 a = outline.edge_start(e), q = outline.edge_end(e);
      const Vec2 ab = q - a;
      const double u = std::clamp((b - a).dot(ab) / ab.squared_norm(), 0.0, 1.0);
      const Vec2 p = a + ab * u;
      const double dd = (b - p).norm();
      if (dd < d) d = dd, nearest = p;
    }
    const bool inside = outline.contains(b);
    if (inside || d < r) {
      Vec2 dir = b - nearest;
      if (inside) dir = -dir;
      if (dir.norm() < 1e-12) dir = -outline.boundary_inward_normal(nearest_boundary_fraction(outline, nearest));
      const Vec2 fixed = nearest + dir * (r / dir.norm());
      const Vec2 w = s.object.transform(fixed);
      rb = {w.x, w.y, rb.psi};
      d = r;
    }
    if (i < s.in_contact.size()) {
      const bool touching = d <= r + cfg_.contact_tolerance;
      if (s.in_contact[i] && !touching) out.broken = true;
      s.in_contact[i] = touching;
    }
  }
  s.clock += dt;
  return out;
}

double nearest_boundary_fraction(const Polygon& outline, const Vec2& p) {
  const double perim = outline.perimeter();
  double best = std::numeric_limits<double>::infinity(), frac = 0.0, acc = 0.0;
  for (size_t e = 0; e < outline.size(); ++e) {
    const Vec2 a = outline.edge_start(e), ab = outline.edge_end(e) - a;
    const double len = ab.norm();
    const double u = std::clamp((p - a).dot(ab) / (len * len), 0.0, 1.0);
    const double d = (p - (a + ab * u)).norm();
    if (d < best) best = d, frac = (acc + u * len) / perim;
    acc += len;
  }
  return frac >= 1.0 ? frac - 1.0 : frac;
}

std::vector<SE2State> spawn_robots(const InteractionMode& mode, const SE2State& object, double robot_radius) {
  std::vector<SE2State> out;
  for (const auto& cp : mode.contacts) out.push_back(robot_slot(cp, object, robot_radius));
  return out;
}

Metrics metrics(const ExecutionLog& log) {
  Metrics m;
  m.SR = log.success ? 1.0 : 0.0;
  m.PT = log.planning_seconds;
  if (log.records.empty()) return m;
  size_t tracked = 0;
  for (size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (r.phase == Phase::Push) {
      m.TE += se2_distance(r.object, r.reference, log.c);
      ++tracked;
    }
    for (const auto& cmd : r.commands) m.CC += cmd.v.squared_norm() * log.dt;
    if (i > 0) m.SM += (r.velocity - log.records[i - 1].velocity).weighted_norm(log.c);
  }
  if (tracked > 0) m.TE /= static_cast<double>(tracked);
  if (log.records.size() > 1) m.SM /= static_cast<double>(log.records.size() - 1);
  m.ET = log.records.back().t;
  m.EE = se2_distance(log.records.back().object, log.goal, log.c);
  return m;
}

namespace {

// A run is a maximal stretch of plan segments that share one mode.
struct Run {
  size_t first = 0, last = 0;  // segment range [first, last)
  std::vector<SE2State> reference;
  std::vector<size_t> ref_segment;
};

Run make_run(const HybridPlan& plan, size_t first, double c, double spacing) {
  Run run;
  run.first = first;
  run.last = first + 1;
  while (run.last < plan.segments() && *plan.keyframes[run.last].mode == *plan.keyframes[first].mode) ++run.last;
  run.reference.push_back(plan.keyframes[first].state);
  run.ref_segment.push_back(first);
  for (size_t k = first; k < run.last; ++k) {
    const auto samples = sample_arc(plan.arc(k, c), c, spacing);
    for (size_t j = 1; j < samples.size(); ++j) {
      run.reference.push_back(samples[j]);
      run.ref_segment.push_back(k);
    }
  }
  return run;
}

}  // namespace

SwitchMotion plan_switch(const SimState& s, const InteractionMode& to, const ObjectIntrinsics& intr, double r,
                         double gap) {
  const Polygon& outline = intr.shape.outline;
  std::vector<double> old_t;
  for (const auto& rb : s.robots) old_t.push_back(nearest_boundary_fraction(outline, s.object.inverse_transform(rb.position())));
  std::vector<double> new_t;
  for (const auto& cp : to.contacts) new_t.push_back(cp.boundary_t);
  if (old_t.size() != new_t.size()) throw std::invalid_argument("robot count differs from mode size");
  const SwitchAssignment as = assign_switch(old_t, new_t);
  SwitchMotion sp;
  sp.aligned.contacts.resize(to.size());
  sp.waypoints.resize(s.robots.size());
  sp.next.assign(s.robots.size(), 0);
  for (size_t i = 0; i < s.robots.size(); ++i) {
    const ContactPoint& cp = to.contacts[static_cast<size_t>(as.target[i])];
    sp.aligned.contacts[i] = cp;
    auto& w = sp.waypoints[i];
    for (const Vec2& b : boundary_waypoints(outline, as.paths[i], r + gap, 0.05)) w.push_back(s.object.transform(b));
    w.push_back(robot_slot(cp, s.object, r).position());
  }
  return sp;
}

bool switch_commands(SwitchMotion& m, const std::vector<SE2State>& robots, double speed, double dt,
                     std::vector<RobotCommand>& commands) {
  bool done = true;
  const double step_len = speed * dt;
  commands.assign(robots.size(), RobotCommand{});
  for (size_t i = 0; i < robots.size(); ++i) {
    const auto& wp = m.waypoints[i];
    size_t& j = m.next[i];
    const Vec2 pos = robots[i].position();
    while (j + 1 < wp.size() && (wp[j] - pos).norm() <= step_len) ++j;
    const Vec2 d = wp[j] - pos;
    if (j + 1 < wp.size() || d.norm() > 1e-9) done = false;
    commands[i].v = d.norm() <= step_len ? d / dt : d * (speed / d.norm());
  }
  return done;
}

ExecutionLog run_episode(const EpisodeInputs& in, const HybridPlan& initial, const TrackerConfig& tracker,
                         const SimConfig& scfg, const DisturbanceConfig& dist, const ReplanConfig& rcfg) {
  const ObjectIntrinsics& intr = *in.intr;
  const Workspace& ws = *in.ws;
  const double c = intr.c();
  const double dt = 1.0 / scfg.rate;
  const double r = scfg.robot_radius;
  const double gap = 0.5 * scfg.contact_tolerance;

  ExecutionLog log;
  log.seed = dist.seed;
  log.c = c;
  log.dt = dt;
  log.goal = in.goal;
  log.plans.push_back(initial);

  Simulator sim(intr, scfg, dist);
  HybridPlan plan = initial;
  if (plan.segments() == 0) throw std::invalid_argument("empty plan");

  SimState s;
  s.object = plan.keyframes.front().state;
  s.mode = *plan.keyframes.front().mode;
  s.robots = spawn_robots(s.mode, s.object, r);
  s.in_contact.assign(s.robots.size(), true);

  Phase phase = Phase::Push;
  Run run = make_run(plan, 0, c, scfg.reference_spacing);
  size_t cursor = 0;
  RefinedTrajectory refined;
  double refine_t0 = 0.0, next_refine = 0.0, next_reference = 0.0;
  BodyVelocity last_velocity;
  SwitchMotion pending;
  std::deque<std::pair<double, SE2State>> history;
  bool teleported = false;
  std::optional<double> success_at;

  auto start_switch = [&](const InteractionMode& to) {
    pending = plan_switch(s, to, intr, r, gap);
    std::fill(s.in_contact.begin(), s.in_contact.end(), false);
    phase = Phase::Switch;
  };
  auto begin_run = [&](size_t first) {
    run = make_run(plan, first, c, scfg.reference_spacing);
    s.segment = first;
    cursor = 0;
    next_refine = next_reference = s.clock;
    history.clear();
  };

  std::vector<std::string> events;
  const long long max_steps = static_cast<long long>(std::ceil(scfg.timeout * scfg.rate));
  for (long long k = 0;; ++k) {
    events.clear();
    if (k >= max_steps) {
      log.reason = "timeout";
      break;
    }
    if (scfg.teleport_time && !teleported && s.clock >= *scfg.teleport_time) {
      teleported = true;
      s.object = {s.object.x + scfg.teleport_offset.x, s.object.y + scfg.teleport_offset.y,
                  s.object.psi + scfg.teleport_offset.psi};
      events.push_back("teleport");
    }

    // replanning triggers
    if (phase == Phase::Push && !success_at) {
      std::string why;
      double dev = std::numeric_limits<double>::infinity();
      for (const auto& x : run.reference) dev = std::min(dev, se2_distance(x, s.object, c));
      if (dev > rcfg.deviation_threshold) why = "deviation";
      else if (clearance(intr.shape, s.object, ws) < rcfg.clearance_min) why = "clearance";
      else if (!history.empty() && s.clock - history.front().first >= rcfg.stuck_window) {
        while (history.size() > 1 && s.clock - history[1].first >= rcfg.stuck_window) history.pop_front();
        if (se2_distance(history.front().second, s.object, c) < rcfg.stuck_distance) why = "stuck";
      }
      if (!why.empty()) {
        events.push_back("replan:" + why);
        if (log.replans >= rcfg.max_replans) {
          log.reason = "replan limit";
          break;
        }
        ++log.replans;
        try {
          const auto t0 = std::chrono::steady_clock::now();
          plan = in.planner(s.object);
          log.planning_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } catch (const std::exception& e) {
          log.reason = std::string("replan failed: ") + e.what();
          break;
        }
        log.plans.push_back(plan);
        begin_run(0);
        start_switch(*plan.keyframes.front().mode);
      }
    }

    std::vector<RobotCommand> commands(s.robots.size());
    SE2State reference = s.object;
    double residual = 0.0;
    if (phase == Phase::Switch) {
      if (switch_commands(pending, s.robots, tracker.robot_max_speed, dt, commands)) {
        s.mode = pending.aligned;
        s.robots = spawn_robots(s.mode, s.object, r);
        std::fill(s.in_contact.begin(), s.in_contact.end(), true);
        phase = Phase::Push;
        next_refine = next_reference = s.clock;
        history.clear();
        events.push_back("switch_done");
        std::fill(commands.begin(), commands.end(), RobotCommand{});
      }
    }
    if (phase == Phase::Push) {
      if (s.clock >= next_reference - 1e-12) {
        cursor = local_goal_index(run.reference, cursor, s.object, scfg.reach, c);
        next_reference += 1.0 / tracker.reference_hz;
      }
      if (s.clock >= next_refine - 1e-12) {
        refined = refine_trajectory(s.object, run.reference[cursor], s.mode, intr, ws, tracker, &last_velocity);
        refine_t0 = s.clock;
        next_refine += 1.0 / tracker.optimizer_hz;
      }
      const double tau = s.clock - refine_t0;
      commands = robot_commands(refined, tau, s.mode, s.robots, r, tracker);
      reference = refined.state_at(tau);
      if (!refined.residuals.empty()) {
        residual = refined.residuals[std::min(refined.residuals.size() - 1, static_cast<size_t>(tau / refined.dt))];
      }
      s.segment = run.ref_segment[cursor];
    }

    LogRecord rec;
    rec.t = s.clock;
    rec.phase = phase;
    rec.segment = s.segment;
    rec.object = s.object;
    rec.reference = reference;
    rec.robots = s.robots;
    rec.commands = commands;
    rec.residual = residual;

    const StepOutcome so = sim.step(s, commands, dt);
    if (phase == Phase::Switch) std::fill(s.in_contact.begin(), s.in_contact.end(), false);
    if (so.broken) events.push_back("contact_broken");
    rec.velocity = so.applied;
    last_velocity = so.realized;
    if (phase == Phase::Push && (history.empty() || s.clock - history.back().first >= 0.1)) {
      history.emplace_back(s.clock, s.object);
    }

    // run completion and goal test
    bool finished = false;
    if (phase == Phase::Push) {
      const bool at_run_end = cursor + 1 == run.reference.size() &&
                              se2_distance(s.object, run.reference.back(), c) <= scfg.switch_tolerance;
      if (at_run_end && run.last < plan.segments()) {
        const size_t next = run.last;
        const InteractionMode to = *plan.keyframes[next].mode;
        begin_run(next);
        ++log.executed_switches;
        events.push_back("switch");
        start_switch(to);
      }
    }
    if (!success_at && (s.object.position() - in.goal.position()).norm() <= scfg.goal_tolerance) {
      success_at = s.clock;
      log.success = true;
      events.push_back("goal");
    }
    if (clearance(intr.shape, s.object, ws) <= 0.0) {
      events.push_back("collision");
      if (!log.success) log.reason = "collision";
      finished = true;
    }
    if (success_at && (se2_distance(s.object, in.goal, c) <= scfg.settle_tolerance ||
                       s.clock - *success_at >= scfg.settle_time)) {
      finished = true;
    }
    rec.events = events;
    log.records.push_back(std::move(rec));
    if (finished) break;
  }
  if (!log.success && log.reason.empty()) log.reason = "timeout";
  // final state record so metrics see the last pose
  LogRecord last;
  last.t = s.clock;
  last.phase = phase;
  last.segment = s.segment;
  last.object = s.object;
  last.reference = log.records.empty() ? s.object : log.records.back().reference;
  last.robots = s.robots;
  last.commands.assign(s.robots.size(), RobotCommand{});
  last.velocity = log.records.empty() ? BodyVelocity{} : log.records.back().velocity;
  last.events = {log.success ? "end:success" : "end:" + log.reason};
  log.records.push_back(std::move(last));
  return log;
}

}  // namespace pushcraft
