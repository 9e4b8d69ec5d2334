#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "pushcraft/baselines.hpp"
#include "pushcraft/scenario.hpp"
#include "pushcraft/svg.hpp"

using namespace pushcraft;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kSchema = 2, kNoPath = 3, kNoPlan = 4, kSimFailure = 5 };


unsigned thread_cap(size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PUSHCRAFT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<size_t>(n, std::max<size_t>(jobs, 1)));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

struct Summary {
  double mean = 0.0, std = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(xs.size()));
  return s;
}

// mean and std per metric, printed as one table row
json aggregate(const std::vector<Metrics>& ms, const std::string& label, std::ostream& table) {
  static const char* names[] = {"SR", "TE", "CC", "SM", "PT", "ET", "EE"};
  std::vector<std::vector<double>> cols(7);
  for (const auto& m : ms) {
    const double v[] = {m.SR, m.TE, m.CC, m.SM, m.PT, m.ET, m.EE};
    for (int i = 0; i < 7; ++i) cols[static_cast<size_t>(i)].push_back(v[i]);
  }
  json out = {{"method", label}, {"episodes", ms.size()}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-6s %3zu", label.c_str(), ms.size());
  table << buf;
  for (int i = 0; i < 7; ++i) {
    const Summary s = summarize(cols[static_cast<size_t>(i)]);
    out[names[i]] = {{"mean", s.mean}, {"std", s.std}};
    std::snprintf(buf, sizeof buf, "  %9.3f ± %-7.3f", s.mean, s.std);
    table << buf;
  }
  table << '\n';
  return out;
}

void table_header(std::ostream& os) {
  os << "method   n ";
  for (const char* n : {"SR", "TE", "CC", "SM", "PT", "ET", "EE"}) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "  %-19s", n);
    os << buf;
  }
  os << '\n';
}

int cmd_plan(const std::string& scenario_path, const std::string& out, std::optional<std::uint64_t> seed,
             std::optional<size_t> nodes, std::optional<double> secs) {
  Scenario sc = load_scenario(scenario_path);
  const std::string hash = scenario_hash(sc);
  if (seed) sc.seed = *seed;
  if (nodes) sc.search.max_nodes = *nodes;
  if (secs) sc.search.max_seconds = *secs;
  Pipeline pipe(sc);
  const PlanResult r = pipe.plan();

  PlanFile pf;
  pf.scenario_hash = hash;
  pf.scenario = sc;
  pf.path = r.path;
  pf.plan = r.plan;
  write_text(out, plan_to_json(pf).dump(1) + "\n");
  write_text(out + ".timing.json", json{{"planning_seconds", r.seconds}}.dump() + "\n");

  const auto& p = r.plan;
  std::printf("plan: %zu keyframes, %zu segments, %d mode switches, %d distinct modes\n", p.keyframes.size(),
              p.segments(), p.mode_switches(), p.mode_count());
  const double c = pipe.intrinsics().c();
  for (size_t k = 0; k < p.segments(); ++k) {
    const double loss = p.keyframes[k].mode ? arc_loss(*p.keyframes[k].mode, p.arc(k, c), pipe.intrinsics(),
                                                       pipe.scenario().modegen.weights)
                                            : 0.0;
    std::printf("  segment %2zu: cost %.4f (loss %.4f, switch %.4f)%s\n", k, p.segment_costs[k], loss,
                p.segment_costs[k] - loss, p.keyframes[k].from_sata ? " sata" : "");
  }
  std::printf("total cost %.4f, expansions %zu, guiding path %zu states, inflation %.3f\n", p.assigned_cost,
              p.stats.expansions, r.path.states.size(), r.inflation);
  std::printf("planning time %.3f s\n", r.seconds);
  return kOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& plan_path, int seeds, int seed0,
                 const std::string& baseline, std::optional<double> disturbance, const std::string& out_dir) {
  const Scenario file_sc = load_scenario(scenario_path);
  std::optional<BaselineKind> kind;
  if (!baseline.empty()) {
    kind = parse_baseline(baseline);
    if (!kind) throw ScenarioError("unknown baseline '" + baseline + "'");
  }
  Scenario sc = file_sc;
  std::optional<PlanFile> pf;
  double plan_seconds = 0.0;
  if (!plan_path.empty()) {
    pf = plan_from_json(parse_json_file(plan_path));
    if (pf->scenario_hash != scenario_hash(file_sc)) throw ScenarioError("plan was made for a different scenario");
    sc = pf->scenario;
    if (fs::exists(plan_path + ".timing.json")) {
      plan_seconds = parse_json_file(plan_path + ".timing.json").value("planning_seconds", 0.0);
    }
  } else if (!kind) {
    throw ScenarioError("--plan is required without --baseline");
  }
  DisturbanceConfig dist = sc.disturbance;
  if (disturbance) {
    dist.sigma_ratio = *disturbance;
    if (dist.rate <= 0.0) dist.rate = 10.0;
  }
  fs::create_directories(out_dir);
  const std::string method = kind ? baseline_name(*kind) : "kghs";

  std::vector<std::optional<Metrics>> results(static_cast<size_t>(seeds));
  std::vector<std::string> errors(static_cast<size_t>(seeds));
  std::atomic<int> next{0};
  std::mutex io;
  auto worker = [&] {
    std::unique_ptr<Pipeline> pipe;
    std::unique_ptr<BaselineRunner> runner;
    try {
      if (kind) runner = std::make_unique<BaselineRunner>(*kind, sc);
      else pipe = std::make_unique<Pipeline>(sc);
    } catch (const std::exception& e) {
      std::lock_guard lock(io);
      for (auto& e2 : errors) e2 = e.what();
      return;
    }
    for (int i = next++; i < seeds; i = next++) {
      DisturbanceConfig d = dist;
      d.seed = static_cast<std::uint64_t>(seed0 + i);
      try {
        ExecutionLog log;
        if (runner) {
          log = runner->run(d);
        } else {
          log = run_episode(pipe->episode_inputs(), pf->plan, pipe->scenario().tracker, pipe->scenario().sim, d,
                            pipe->scenario().replan);
          log.planning_seconds += plan_seconds;
        }
        const std::string base = out_dir + "/" + method + "_seed" + std::to_string(d.seed) + ".jsonl";
        std::ofstream out(base, std::ios::binary);
        write_log(out, log, sc);
        write_text(base + ".timing.json", json{{"planning_seconds", log.planning_seconds}}.dump() + "\n");
        results[static_cast<size_t>(i)] = metrics(log);
      } catch (const std::exception& e) {
        errors[static_cast<size_t>(i)] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < thread_cap(static_cast<size_t>(seeds)); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<Metrics> ms;
  json per_seed = json::array();
  for (int i = 0; i < seeds; ++i) {
    const auto& r = results[static_cast<size_t>(i)];
    if (!r) {
      std::fprintf(stderr, "seed %d: simulation error: %s\n", seed0 + i, errors[static_cast<size_t>(i)].c_str());
      continue;
    }
    ms.push_back(*r);
    json row = metrics_to_json(*r);
    row["seed"] = seed0 + i;
    per_seed.push_back(row);
  }
  table_header(std::cout);
  json report = aggregate(ms, method, std::cout);
  report["per_seed"] = per_seed;
  report["disturbance"] = {{"rate", dist.rate}, {"sigma_ratio", dist.sigma_ratio}};
  report["scenario_hash"] = scenario_hash(file_sc);
  write_text(out_dir + "/report_" + method + ".json", report.dump(1) + "\n");

  double successes = 0;
  for (const auto& m : ms) successes += m.SR;
  if (ms.size() < static_cast<size_t>(seeds) || successes == 0.0) return kSimFailure;
  return kOk;
}

int cmd_evaluate(const std::string& dir, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, std::vector<Metrics>> by_method;
  json logs = json::array();
  for (const auto& f : files) {
    std::ifstream in(f);
    const LoadedLog ll = read_log(in);
    ExecutionLog log = ll.log;
    const std::string timing = f.string() + ".timing.json";
    if (fs::exists(timing)) log.planning_seconds = parse_json_file(timing).value("planning_seconds", 0.0);
    const Metrics m = metrics(log);
    by_method[log.method].push_back(m);
    json row = metrics_to_json(m);
    row["file"] = f.filename().string();
    row["method"] = log.method;
    row["seed"] = log.seed;
    row["replans"] = log.replans;
    row["reason"] = log.reason;
    logs.push_back(row);
  }
  json report = {{"logs", logs}, {"methods", json::array()}};
  table_header(std::cout);
  for (const auto& [method, ms] : by_method) report["methods"].push_back(aggregate(ms, method, std::cout));
  write_text(out, report.dump(1) + "\n");
  return kOk;
}

int cmd_plot(const std::string& in, const std::string& out) {
  const std::string text = read_file(in);
  json whole;
  bool single = true;
  try {
    whole = json::parse(text);
  } catch (const json::parse_error&) {
    single = false;
  }
  std::string svg;
  if (single && whole.value("kind", "") == "plan") {
    const PlanFile pf = plan_from_json(whole);
    svg = render_svg(pf.scenario, &pf.path, {pf.plan}, nullptr);
  } else {
    std::istringstream is(text);
    const LoadedLog ll = read_log(is);
    // a log without records draws just the workspace
    if (ll.log.records.empty()) svg = render_svg(ll.scenario, nullptr, {}, nullptr);
    else svg = render_svg(ll.scenario, nullptr, ll.log.plans, &ll.log);
  }
  write_text(out, svg);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot pushing: plan, simulate, evaluate, plot"};
  app.require_subcommand(1);

  std::string scenario, out, plan, baseline, logs_dir, in, out_dir = "logs";
  std::optional<std::uint64_t> seed;
  std::optional<size_t> nodes;
  std::optional<double> secs, disturbance;
  int seeds = 1, seed0 = 1;

  auto* p = app.add_subcommand("plan", "Guiding path and hybrid plan for a scenario");
  p->add_option("--scenario", scenario, "Scenario JSON")->required();
  p->add_option("--out", out, "Plan JSON to write")->required();
  p->add_option("--seed", seed, "Mode generation seed");
  p->add_option("--budget-nodes", nodes, "Search node budget");
  p->add_option("--budget-secs", secs, "Search time budget (s)");

  auto* s = app.add_subcommand("simulate", "Closed-loop episodes over seeds");
  s->add_option("--scenario", scenario, "Scenario JSON")->required();
  s->add_option("--plan", plan, "Plan JSON (required unless --baseline)");
  s->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  s->add_option("--seed0", seed0, "First seed");
  s->add_option("--baseline", baseline, "pocb | iab | sdf | aus");
  s->add_option("--disturbance", disturbance, "Velocity noise ratio")->check(CLI::NonNegativeNumber);
  s->add_option("--out-dir", out_dir, "Directory for logs and the report");

  auto* e = app.add_subcommand("evaluate", "Metrics table over a directory of logs");
  e->add_option("--logs", logs_dir, "Directory of .jsonl logs")->required();
  e->add_option("--out", out, "Report JSON")->required();

  auto* pl = app.add_subcommand("plot", "SVG of a plan or log");
  pl->add_option("--in", in, "Plan JSON or log")->required();
  pl->add_option("--out", out, "SVG to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (p->parsed()) return cmd_plan(scenario, out, seed, nodes, secs);
    if (s->parsed()) return cmd_simulate(scenario, plan, seeds, seed0, baseline, disturbance, out_dir);
    if (e->parsed()) return cmd_evaluate(logs_dir, out);
    if (pl->parsed()) return cmd_plot(in, out);
  } catch (const ScenarioError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kSchema;
  } catch (const NoGuidingPath& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kNoPath;
  } catch (const NoFeasiblePlan& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kNoPlan;
  } catch (const InsufficientModes& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kNoPlan;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kSimFailure;
  }
  return kOk;
}
