#include <doctest.h>

#include <random>

#include "pushcraft/sim.hpp"

using namespace pushcraft;
using doctest::Approx;

namespace {

Polygon box(double x0, double y0, double x1, double y1) { return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}); }

ObjectIntrinsics rect() { return make_intrinsics(box(-0.6, -0.25, 0.6, 0.25), 10, 0.5, 0.2); }

InteractionMode mode_for(const ObjectIntrinsics& intr, const BodyVelocity& p) {
  auto cands = candidate_contacts(intr, 0.125, 0.25, 30);
  return mg_so(cands, p, intr, ModeGenConfig{}).modes.front();
}

// world velocity of each contact point under body velocity p
std::vector<RobotCommand> rigid_commands(const SE2State& obj, const InteractionMode& m, const BodyVelocity& p) {
  std::vector<RobotCommand> out;
  const Vec2 v = rotate({p.vx, p.vy}, obj.psi);
  for (const auto& cp : m.contacts) {
    const Vec2 r = obj.transform(cp.position) - obj.position();
    out.push_back({v + r.perp() * p.omega, p.omega});
  }
  return out;
}

SimState at_rest(const InteractionMode& m, const SE2State& obj, double r) {
  SimState s;
  s.object = obj;
  s.mode = m;
  s.robots = spawn_robots(m, obj, r);
  s.in_contact.assign(m.size(), true);
  return s;
}

HybridPlan straight_plan(const ObjectIntrinsics& intr, const SE2State& a, const SE2State& b) {
  HybridPlan plan;
  plan.keyframes.push_back({a, mode_for(intr, connect_arc(a, b, intr.c()).velocity), 0.0, false});
  plan.keyframes.push_back({b, std::nullopt, 1.0, false});
  return plan;
}

}  // namespace

TEST_CASE("rigid inverse round trip") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  auto r = rect();
  auto m = mode_for(r, {1, 0, 0});
  REQUIRE(m.size() >= 2);
  InteractionMode three = m;
  three.contacts.push_back(ContactPoint::on_boundary(r.shape.outline, 0.1, 30));
  for (int k = 0; k < 200; ++k) {
    const SE2State obj(U(rng), U(rng), 3 * U(rng));
    const BodyVelocity p{U(rng), U(rng), U(rng)};
    std::vector<Vec2> pts, normals, vels;
    const auto cmds = rigid_commands(obj, three, p);
    for (size_t i = 0; i < three.size(); ++i) {
      pts.push_back(obj.transform(three.contacts[i].position));
      normals.push_back(rotate(three.contacts[i].normal, obj.psi));
      vels.push_back(cmds[i].v);
    }
    for (double w : {1.0, 0.1}) {
      const auto q = Simulator::rigid_inverse(obj, pts, normals, vels, w);
      CHECK((q - p).weighted_norm(1.0) <= 1e-9);
    }
  }
}

TEST_CASE("allowed push moves the object along the exact arc") {
  auto r = rect();
  const double rr = 0.125;
  const BodyVelocity p{0.5, 0.0, 0.2};
  auto m = mode_for(r, p);
  REQUIRE(velocity_allowed(m, p, r));
  Simulator sim(r, SimConfig{}, DisturbanceConfig{});
  const SE2State start(1, -0.5, 0.4);
  const double dt = 1.0 / 240;

  SimState s = at_rest(m, start, rr);
  auto out = sim.step(s, rigid_commands(s.object, m, p), dt);
  CHECK_FALSE(out.projected);
  CHECK((out.realized - p).weighted_norm(r.c()) <= 1e-9);
  CHECK(se2_distance(s.object, roll_arc(start, p, dt), 1.0) <= 1e-12);

  for (int k = 1; k < 240; ++k) {
    out = sim.step(s, rigid_commands(s.object, m, p), dt);
    REQUIRE_FALSE(out.broken);
  }
  CHECK(se2_distance(s.object, roll_arc(start, p, 240 * dt), 1.0) <= 1e-6);
  CHECK(s.clock == Approx(1.0));
}

TEST_CASE("disallowed push is projected onto the allowed set") {
  auto r = rect();
  auto m = mode_for(r, {1, 0, 0});
  Simulator sim(r, SimConfig{}, DisturbanceConfig{});
  int tried = 0;
  for (const BodyVelocity p : {BodyVelocity{1, 1, 0}, BodyVelocity{0, 1, 0}, BodyVelocity{1, -0.4, 0.5},
                               BodyVelocity{0.8, 0.2, -1.0}, BodyVelocity{0.3, 0, 2.0}}) {
    if (velocity_allowed(m, p, r)) continue;
    ++tried;
    SimState s = at_rest(m, {0, 0, 0}, 0.125);
    const auto out = sim.step(s, rigid_commands(s.object, m, p), 1.0 / 240);
    CHECK(out.projected);
    const double c = r.c();
    const double inner = out.realized.vx * out.desired.vx + out.realized.vy * out.desired.vy +
                         c * c * out.realized.omega * out.desired.omega;
    CHECK(inner >= 0.0);
    if (!out.realized.is_zero()) CHECK(velocity_allowed(m, out.realized, r));
  }
  CHECK(tried >= 3);
}

TEST_CASE("robots not touching do not push") {
  auto r = rect();
  auto m = mode_for(r, {1, 0, 0});
  Simulator sim(r, SimConfig{}, DisturbanceConfig{});
  SimState s = at_rest(m, {0, 0, 0}, 0.125);
  for (auto& rb : s.robots) rb.x -= 0.01;
  const auto out = sim.step(s, rigid_commands(s.object, m, {0.2, 0, 0}), 1.0 / 240);
  CHECK(out.realized.is_zero());
  CHECK(s.object.x == 0.0);

  // pulling away separates
  SimState t = at_rest(m, {0, 0, 0}, 0.125);
  const auto back = sim.step(t, rigid_commands(t.object, m, {-0.5, 0, 0}), 0.1);
  CHECK(back.realized.is_zero());
  CHECK(back.broken);
}

TEST_CASE("disturbance is reproducible and zero when at rest") {
  auto r = rect();
  auto m = mode_for(r, {1, 0, 0});
  DisturbanceConfig d{10.0, 0.1, 7};
  auto run = [&](std::uint64_t seed) {
    d.seed = seed;
    Simulator sim(r, SimConfig{}, d);
    SimState s = at_rest(m, {0, 0, 0}, 0.125);
    std::vector<BodyVelocity> v;  // noise per unit of realized speed
    for (int k = 0; k < 120; ++k) {
      const auto out = sim.step(s, rigid_commands(s.object, m, {0.5, 0, 0}), 1.0 / 240);
      v.push_back((out.applied - out.realized) * (1.0 / out.realized.weighted_norm(r.c())));
    }
    return v;
  };
  const auto a = run(7), b = run(7), other = run(8);
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].vx == b[i].vx);
    CHECK(a[i].vy == b[i].vy);
    CHECK(a[i].omega == b[i].omega);
    differs = differs || a[i].vy != other[i].vy;
  }
  CHECK(differs);
  // piecewise constant at 10 Hz: the first 24 steps share one noise draw
  for (int i = 1; i < 24; ++i) CHECK(a[i].vy == Approx(a[0].vy));
  CHECK(a[30].vy != Approx(a[0].vy));

  Simulator sim(r, SimConfig{}, d);
  SimState s = at_rest(m, {0, 0, 0}, 0.125);
  std::vector<RobotCommand> still(m.size());
  CHECK(sim.step(s, still, 1.0 / 240).applied.is_zero());
}

TEST_CASE("metrics on a hand-built log") {
  ExecutionLog log;
  log.c = 0.5;
  log.dt = 0.1;
  log.goal = {1, 0, 0};
  log.success = true;
  log.planning_seconds = 2.5;
  LogRecord a, b, e;
  a.t = 0.0, a.object = {0, 0, 0}, a.reference = {0, 0.1, 0}, a.commands = {{{1, 0}, 0}}, a.velocity = {1, 0, 0};
  b.t = 0.1, b.object = {0.1, 0, 0}, b.reference = {0.1, 0, 0}, b.commands = {{{1, 1}, 0}}, b.velocity = {1, 0, 0.2};
  e.t = 0.2, e.phase = Phase::Switch, e.object = {0.2, 0, 0.4}, e.reference = {5, 5, 0}, e.commands = {{{0, 2}, 0}};
  log.records = {a, b, e};
  const auto m = metrics(log);
  CHECK(m.SR == 1.0);
  CHECK(m.PT == 2.5);
  CHECK(m.TE == Approx(0.05));
  CHECK(m.CC == Approx(0.7));
  CHECK(m.SM == Approx((0.1 + std::sqrt(1.0 + 0.01)) / 2));
  CHECK(m.ET == Approx(0.2));
  CHECK(m.EE == Approx(std::sqrt(0.64 + 0.04)));

  ExecutionLog still = log;
  for (auto& rec : still.records) rec.commands = {{{0, 0}, 0}}, rec.velocity = {};
  const auto z = metrics(still);
  CHECK(z.CC == 0.0);
  CHECK(z.SM == 0.0);
}

TEST_CASE("episode: free space, determinism and a forced replan") {
  auto r = rect();
  Workspace ws(box(-1, -2, 4, 2), {}, 0.3);
  const SE2State start(0, 0, 0), goal(2.5, 0, 0);
  int calls = 0;
  EpisodeInputs in{&r, &ws, goal, [&](const SE2State& s) {
                     ++calls;
                     return straight_plan(r, s, goal);
                   }};
  const HybridPlan plan = straight_plan(r, start, goal);
  SimConfig sc;
  DisturbanceConfig none;

  auto log = run_episode(in, plan, TrackerConfig{}, sc, none, ReplanConfig{});
  CHECK(log.success);
  CHECK(log.replans == 0);
  CHECK(calls == 0);
  const auto m = metrics(log);
  CHECK(m.EE <= 0.2);
  CHECK(m.TE < 0.05);
  CHECK(log.records.back().events.front() == "end:success");

  DisturbanceConfig d{10.0, 0.1, 11};
  auto x = run_episode(in, plan, TrackerConfig{}, sc, d, ReplanConfig{});
  auto y = run_episode(in, plan, TrackerConfig{}, sc, d, ReplanConfig{});
  REQUIRE(x.records.size() == y.records.size());
  bool same = true;
  for (size_t i = 0; i < x.records.size(); ++i) {
    const auto &p = x.records[i].object, &q = y.records[i].object;
    same = same && p.x == q.x && p.y == q.y && p.psi == q.psi && x.records[i].events == y.records[i].events;
  }
  CHECK(same);

  sc.teleport_time = 1.0;
  sc.teleport_offset = {0.0, 0.4, 0.0};
  calls = 0;
  auto t = run_episode(in, plan, TrackerConfig{}, sc, none, ReplanConfig{});
  CHECK(t.replans == 1);
  CHECK(calls == 1);
  CHECK(t.plans.size() == 2);
  CHECK(t.success);
  int teleports = 0;
  for (const auto& rec : t.records) {
    for (const auto& ev : rec.events) teleports += ev == "teleport";
  }
  CHECK(teleports == 1);
}
