// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pushcraft/baselines.hpp"
#include "pushcraft/scenario.hpp"
#include "pushcraft/switching.hpp"

using namespace pushcraft;

namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string scenario_dir() {
  if (const char* d = std::getenv("PUSHCRAFT_SCENARIO_DIR")) return d;
#ifdef PUSHCRAFT_SCENARIO_DIR
  return PUSHCRAFT_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

Scenario bundled(const std::string& name) { return load_scenario(scenario_dir() + "/" + name + ".json"); }

const std::vector<std::string> kPlanned{"narrow_passage", "spiral_corridor", "pillars"};
const std::vector<std::string> kAll{"free_space", "narrow_passage", "spiral_corridor", "pillars"};

Polygon box(double x0, double y0, double x1, double y1) { return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}); }

struct Stats {
  double mean = 0, sd = 0;
};
Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(s.sd / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

void limit_surface(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> U(-2, 2), S(0.1, 10);
  const Polygon sq = box(-0.5, -0.5, 0.5, 0.5);
  double member = 0, normal = 0;
  bool scale_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const auto intr = make_intrinsics(sq, 1.0, 0.5, 0.2, S(rng), S(rng));
    const BodyVelocity p{U(rng), U(rng), U(rng)};
    const auto eta = friction_force(p, intr);
    const Eigen::Vector3d d1(1 / intr.f_max, 1 / intr.f_max, 1 / intr.m_max);
    const Eigen::Vector3d scaled = d1.cwiseProduct(eta.vec());
    member = std::max(member, std::abs(scaled.norm() - 1));
    const Eigen::Vector3d n = -d1.cwiseProduct(scaled);
    normal = std::max(normal, n.normalized().cross(p.vec().normalized()).norm());
    // powers of two keep the scaling exact in floating point
    const double k = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);
    const auto eta2 = friction_force(p * k, intr);
    scale_exact = scale_exact && eta2.fx == eta.fx && eta2.fy == eta.fy && eta2.torque == eta.torque;
  }
  const double secs = since(t0);
  v.detail << "membership " << member << ", normality " << normal << ", " << secs << " s";
  v.require(member <= 1e-9, "membership");
  v.require(normal <= 1e-9, "normality");
  v.require(scale_exact, "scale invariance");
  v.require(secs < 1.0, "runtime");
}

void arc_suite(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937 rng(102);
  std::uniform_real_distribution<double> U(-3, 3), A(-kPi, kPi), C(0.2, 1.5);
  double trip = 0, equi = 0, rk = 0;
  for (int i = 0; i < 1000; ++i) {
    const double c = C(rng);
    const SE2State s0(U(rng), U(rng), A(rng)), sg(U(rng), U(rng), A(rng));
    const auto arc = connect_arc(s0, sg, c);
    trip = std::max(trip, se2_distance(roll_arc(s0, arc.velocity, arc.duration), sg, c));
    if (std::abs(arc.velocity.omega) > kEpsOmega) {
      const Vec2 vel{arc.velocity.vx, arc.velocity.vy};
      const Vec2 xc = s0.position() - rotate(vel, s0.psi - kPi / 2) / arc.velocity.omega;
      const double R = vel.norm() / std::abs(arc.velocity.omega);
      for (const auto& s : roll_arc(s0, arc.velocity, arc.duration, 20).samples) {
        equi = std::max(equi, std::abs((s.position() - xc).norm() - R) / std::max(1.0, R));
      }
    }
    rk = std::max(rk, se2_distance(test::rk4(s0, arc.velocity, arc.duration, 1e-3), arc.end(), 1.0));
  }
  const double secs = since(t0);
  v.detail << "round trip " << trip << ", equidistance " << equi << ", rk4 " << rk << ", " << secs << " s";
  v.require(trip <= 1e-8, "round trip");
  v.require(equi <= 1e-9, "equidistance");
  v.require(rk <= 1e-6, "rk4");
  v.require(secs < 5.0, "runtime");
}

void lp_oracle(Verdict& v) {
  const auto t0 = Clock::now();
  const auto intr = make_intrinsics(box(-0.5, -0.5, 0.5, 0.5), 10, 0.5, 0.2);
  std::mt19937 rng(103);
  std::uniform_real_distribution<double> U(-1, 1), T(0, 1), F(5, 60);
  int below = 0, close = 0, positive = 0;
  for (int trial = 0; trial < 100; ++trial) {
    InteractionMode m;
    for (int k = 0; k < 1 + trial % 2; ++k) m.contacts.push_back(ContactPoint::on_boundary(intr.shape.outline, T(rng), F(rng)));
    const BodyVelocity p{U(rng), U(rng), U(rng)};
    const double lpv = feasibility(m, p, intr);
    const double grid = test::grid_feasibility(m, p, intr);
    below += lpv <= grid + 1e-9;
    if (lpv > kTolLp) {
      ++positive;
      close += grid <= 1.05 * lpv;
    }
  }
  const double secs = since(t0);
  v.detail << below << "/100 at or below grid, " << close << "/" << positive << " positive within 5%, " << secs << " s";
  v.require(below == 100, "LP above grid");
  v.require(close == positive, "relative gap");
  v.require(secs < 30.0, "runtime");
}

void caging(Verdict& v) {
  const auto intr = make_intrinsics(box(-0.5, -0.5, 0.5, 0.5), 10, 0.5, 0.2);
  const double f = 50;
  const InteractionMode same{{ContactPoint::on_boundary(intr.shape.outline, 0.0625, f),
                              ContactPoint::on_boundary(intr.shape.outline, 0.1875, f)}};
  const InteractionMode opposed{{ContactPoint::on_boundary(intr.shape.outline, 0.125, f),
                                 ContactPoint::on_boundary(intr.shape.outline, 0.625, f)}};
  const BodyVelocity p{0, 1, 0};
  const double js = multi_feasibility(same, p, intr), jo = multi_feasibility(opposed, p, intr);
  v.detail << "J_MF opposed " << jo << ", same side " << js;
  v.require(feasibility(same, p, intr) <= kTolLp && feasibility(opposed, p, intr) <= kTolLp, "main direction");
  v.require(jo <= 0.9 * js, "10% margin");
}

void sparsity(Verdict& v) {
  const auto sq = make_intrinsics(box(-0.5, -0.5, 0.5, 0.5), 10, 0.5, 0.2);
  const double fpush = 50;
  v.require(fpush >= sq.f_max, "f_push_max >= f_max");
  ModeGenConfig cfg;
  cfg.n_robots = 2;
  const auto res = mg_so(candidate_contacts(sq, 0.125, 0.25, fpush), {0, 1, 0}, sq, cfg);
  int zero = 0;
  for (int i = 0; i < res.force_matrix.rows(); ++i) zero += res.force_matrix.row(i).lpNorm<Eigen::Infinity>() < kTolLp;
  const double frac = static_cast<double>(zero) / static_cast<double>(res.force_matrix.rows());
  v.require(!res.modes.empty(), "no modes");
  const double jf = res.modes.empty() ? 1e9 : feasibility(res.modes.front(), {0, 1, 0}, sq);
  v.detail << zero << "/" << res.force_matrix.rows() << " zero rows, top J_F " << jf;
  v.require(frac >= 0.6, "zero rows");
  v.require(jf <= 1e-6, "top mode J_F");
}

void sata_convergence(Verdict& v) {
  const auto rect = make_intrinsics(box(-0.6, -0.25, 0.6, 0.25), 10, 0.5, 0.2);
  const double c = rect.c();
  ModeGenConfig cfg;
  const auto rep = check_sufficient(candidate_contacts(rect, 0.125, 0.25, 30), rect, cfg);
  v.require(rep.sufficient, "sufficient witness");
  if (!rep.sufficient) return;
  const auto arc = connect_arc({0, 0, 0}, {0.6, 0.8, kPi / 3}, c);
  bool lateral_blocked = true;
  for (const auto& w : rep.witnesses) lateral_blocked = lateral_blocked && !velocity_allowed(w.mode, arc.velocity, rect);
  v.require(lateral_blocked, "segment velocity is allowed by a witness mode");
  std::vector<double> h;
  for (int L : {4, 8, 16, 32}) h.push_back(sata_fixed(arc, L, rep, rect, 0.0025).hausdorff);
  v.detail << "hausdorff L=4..32:";
  for (double x : h) v.detail << ' ' << x;
  for (size_t i = 0; i + 1 < h.size(); ++i) v.require(h[i + 1] <= 0.75 * h[i], "ratio at L=" + std::to_string(4 << i));
  const auto fin = sata(arc, 0.02, rep, rect, 0.0025);
  const double end_err = se2_distance(fin.pieces.back().arc.end(), arc.end(), c);
  v.detail << "; e=0.02 gives L=" << fin.segments << ", error " << fin.hausdorff << ", end " << end_err;
  v.require(fin.hausdorff <= 0.02 && end_err <= 0.02, "final error");
}

// Random collision-free pose at least `min_gap` from `avoid`.
SE2State random_pose(std::mt19937_64& rng, const Scenario& sc, const Shape& shape, const SE2State* avoid, double min_gap) {
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (const auto& p : sc.workspace.bounds.vertices()) {
    x0 = std::min(x0, p.x), y0 = std::min(y0, p.y), x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
  }
  std::uniform_real_distribution<double> X(x0, x1), Y(y0, y1), A(-kPi, kPi);
  for (;;) {
    const SE2State s(X(rng), Y(rng), A(rng));
    if (collides(shape, s, sc.workspace)) continue;
    if (avoid && (s.position() - avoid->position()).norm() < min_gap) continue;
    return s;
  }
}

void kghs_feasibility(Verdict& v) {
  std::mt19937_64 rng(107);
  int ok = 0, total = 0;
  double worst = 0;
  for (const auto& name : kPlanned) {
    const Scenario base = bundled(name);
    const auto shape = make_intrinsics(base.object, base.mass, base.mu_ground, base.mu_contact).shape;
    for (int k = 0; k < 5; ++k) {
      Scenario sc = base;
      sc.start = random_pose(rng, sc, shape, nullptr, 0);
      sc.goal = random_pose(rng, sc, shape, &sc.start, 2.0);
      ++total;
      const auto t0 = Clock::now();
      try {
        Pipeline pipe(sc);
        const PlanResult r = pipe.plan();
        const double secs = since(t0);
        worst = std::max(worst, secs);
        const Workspace ws(sc.workspace.bounds, sc.workspace.obstacles, r.inflation);
        const auto& intr = pipe.intrinsics();
        bool good = r.plan.stats.expansions <= sc.search.max_nodes && secs <= 60.0;
        for (size_t i = 0; i < r.plan.segments() && good; ++i) {
          const auto arc = r.plan.arc(i, intr.c());
          good = r.plan.keyframes[i].mode && velocity_allowed(*r.plan.keyframes[i].mode, arc.velocity, intr);
          for (const auto& s : sample_arc(arc, intr.c(), 0.02)) good = good && !collides(intr.shape, s, ws);
        }
        good = good && se2_distance(r.plan.keyframes.back().state, sc.goal, intr.c()) < 1e-6;
        ok += good;
        if (!good) v.detail << " [" << name << " #" << k << " invalid plan]";
      } catch (const std::exception& e) {
        v.detail << " [" << name << " #" << k << ": " << e.what() << "]";
      }
    }
  }
  v.detail << " " << ok << "/" << total << " feasible, slowest " << worst << " s";
  v.require(ok == total, "instances");
}

void switching(Verdict& v) {
  std::mt19937 rng(108);
  std::uniform_real_distribution<double> U(0, 1);
  int crossed = 0;
  double longest = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<double> a(n), b(n);
    for (auto& t : a) t = U(rng);
    for (auto& t : b) t = U(rng);
    const auto s = assign_switch(a, b);
    crossed += paths_cross(s.paths);
    longest = std::max(longest, s.max_fraction());
  }
  v.detail << crossed << " crossings, longest path " << longest << " of the perimeter";
  v.require(crossed == 0, "crossings");
  v.require(longest <= 0.5 + 1e-12, "half perimeter");
}

struct MethodRuns {
  std::vector<Metrics> m;
  std::vector<std::string> reasons;
  double plan_switches = 0;
};

MethodRuns run_kghs(const Scenario& sc, int seeds, double sigma) {
  MethodRuns out;
  Pipeline pipe(sc);
  const PlanResult r = pipe.plan();
  out.plan_switches = r.plan.mode_switches();
  for (int s = 1; s <= seeds; ++s) {
    DisturbanceConfig d = sc.disturbance;
    d.rate = d.rate > 0 ? d.rate : 10.0;
    d.sigma_ratio = sigma;
    d.seed = static_cast<std::uint64_t>(s);
    ExecutionLog log = run_episode(pipe.episode_inputs(), r.plan, pipe.scenario().tracker, pipe.scenario().sim, d,
                                   pipe.scenario().replan);
    log.planning_seconds += r.seconds;
    out.m.push_back(metrics(log));
    out.reasons.push_back(log.reason);
  }
  return out;
}

MethodRuns run_method(BaselineKind kind, const Scenario& sc, int seeds, double sigma) {
  MethodRuns out;
  BaselineRunner runner(kind, sc);
  if (runner.plan()) out.plan_switches = runner.plan()->mode_switches();
  for (int s = 1; s <= seeds; ++s) {
    DisturbanceConfig d = sc.disturbance;
    d.rate = d.rate > 0 ? d.rate : 10.0;
    d.sigma_ratio = sigma;
    d.seed = static_cast<std::uint64_t>(s);
    const ExecutionLog log = runner.run(d);
    out.m.push_back(metrics(log));
    out.reasons.push_back(log.reason);
  }
  return out;
}

std::vector<double> field(const MethodRuns& r, double Metrics::*f) {
  std::vector<double> out;
  for (const auto& m : r.m) out.push_back(m.*f);
  return out;
}

struct Shared {
  bool ready = false;
  std::string error;
  MethodRuns kghs, sdf, iab, pocb, aus;
};

Shared& scenario_one_runs() {
  static Shared sh;
  if (sh.ready || !sh.error.empty()) return sh;
  try {
    const Scenario sc = bundled(kPlanned.front());
    const auto t0 = Clock::now();
    sh.kghs = run_kghs(sc, 20, 0.1);
    sh.sdf = run_method(BaselineKind::SDF, sc, 20, 0.1);
    sh.iab = run_method(BaselineKind::IAB, sc, 20, 0.1);
    sh.pocb = run_method(BaselineKind::POCB, sc, 20, 0.1);
    sh.aus = run_method(BaselineKind::AUS, sc, 20, 0.1);
    std::printf("  (20-seed runs on %s took %.0f s)\n", sc.name.c_str(), since(t0));
    sh.ready = true;
  } catch (const std::exception& e) {
    sh.error = e.what();
  }
  return sh;
}

void closed_loop(Verdict& v) {
  for (const auto& name : kAll) {
    const Scenario sc = bundled(name);
    Pipeline pipe(sc);
    const PlanResult r = pipe.plan();
    DisturbanceConfig d = sc.disturbance;
    d.sigma_ratio = 0.0;
    const ExecutionLog log =
        run_episode(pipe.episode_inputs(), r.plan, pipe.scenario().tracker, pipe.scenario().sim, d, pipe.scenario().replan);
    const double dist = (log.records.back().object.position() - sc.goal.position()).norm();
    v.detail << name << ": " << dist << " m, " << log.replans << " replans; ";
    v.require(log.success && dist <= 0.2 && log.replans <= 1, name + " zero disturbance");
  }
  Shared& sh = scenario_one_runs();
  v.require(sh.ready, sh.error);
  if (!sh.ready) return;
  const double sr = stats(field(sh.kghs, &Metrics::SR)).mean;
  const Stats tk = stats(field(sh.kghs, &Metrics::TE)), tp = stats(field(sh.pocb, &Metrics::TE));
  v.detail << "sigma 0.1: SR " << sr << ", TE std kghs " << tk.sd << " pocb " << tp.sd;
  v.require(sr >= 0.9, "SR");
  v.require(tk.sd <= tp.sd, "TE spread");
}

void ordering(Verdict& v) {
  Shared& sh = scenario_one_runs();
  v.require(sh.ready, sh.error);
  if (!sh.ready) return;
  const double k = stats(field(sh.kghs, &Metrics::SR)).mean, s = stats(field(sh.sdf, &Metrics::SR)).mean,
               i = stats(field(sh.iab, &Metrics::SR)).mean, p = stats(field(sh.pocb, &Metrics::SR)).mean;
  auto combined = [](const MethodRuns& r) {
    std::vector<double> x;
    for (const auto& m : r.m) x.push_back(m.PT + m.ET);
    return stats(x).mean;
  };
  const double ck = combined(sh.kghs), ca = combined(sh.aus);
  v.detail << "SR kghs " << k << " sdf " << s << " iab " << i << " pocb " << p << "; switches aus " << sh.aus.plan_switches
           << " kghs " << sh.kghs.plan_switches << "; PT+ET kghs " << ck << " aus " << ca;
  v.require(k >= s && s >= i && i >= p - 0.05, "SR order");
  v.require(sh.aus.plan_switches >= sh.kghs.plan_switches, "switch count");
  v.require(ck <= ca, "combined cost");
}

void determinism(Verdict& v) {
  const Scenario sc = bundled(kPlanned.front());
  auto plan_text = [&] {
    Pipeline pipe(sc);
    const PlanResult r = pipe.plan();
    PlanFile pf;
    pf.scenario_hash = scenario_hash(sc);
    pf.scenario = sc;
    pf.path = r.path;
    pf.plan = r.plan;
    return plan_to_json(pf).dump(2);
  };
  auto log_text = [&](std::optional<BaselineKind> kind) {
    DisturbanceConfig d = sc.disturbance;
    d.rate = 10.0;
    d.sigma_ratio = 0.1;
    d.seed = 5;
    ExecutionLog log;
    if (kind) {
      log = BaselineRunner(*kind, sc).run(d);
    } else {
      Pipeline pipe(sc);
      const PlanResult r = pipe.plan();
      log = run_episode(pipe.episode_inputs(), r.plan, pipe.scenario().tracker, pipe.scenario().sim, d,
                        pipe.scenario().replan);
    }
    std::ostringstream os;
    write_log(os, log, sc);
    return os.str();
  };
  const bool plans = plan_text() == plan_text();
  const bool logs = log_text(std::nullopt) == log_text(std::nullopt);
  const bool pocb = log_text(BaselineKind::POCB) == log_text(BaselineKind::POCB);
  v.detail << "plan " << (plans ? "identical" : "differs") << ", kghs log " << (logs ? "identical" : "differs")
           << ", pocb log " << (pocb ? "identical" : "differs");
  v.require(plans && logs && pocb, "byte equality");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"limit surface", limit_surface}, {"arcs", arc_suite},          {"LP oracle", lp_oracle},
      {"caging preference", caging},    {"MG-SO sparsity", sparsity}, {"SATA convergence", sata_convergence},
      {"KG-HS feasibility", kghs_feasibility}, {"switching", switching}, {"closed loop", closed_loop},
      {"baseline ordering", ordering},  {"determinism", determinism}};
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::printf("criterion %zu (%s): %s  %s\n", i + 1, criteria[i].first, v.pass ? "PASS" : "FAIL", v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
