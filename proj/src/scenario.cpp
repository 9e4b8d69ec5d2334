#include "pushcraft/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace pushcraft {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ScenarioError(where_ + ": " + msg); }

  bool has(const char* key) const { return j_.contains(key); }

  const json& at(const char* key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(std::string("missing '") + key + "'");
    return j_.at(key);
  }

  double num(const char* key, double def, double lo = -HUGE_VAL, double hi = HUGE_VAL) {
    if (!has(key)) return def;
    return need(key, lo, hi);
  }
  double need(const char* key, double lo, double hi) {
    const json& v = at(key);
    if (!v.is_number()) fail(std::string("'") + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) fail(std::string("'") + key + "' out of range");
    return x;
  }
  long long integer(const char* key, long long def, long long lo, long long hi) {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(std::string("'") + key + "' must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi) fail(std::string("'") + key + "' out of range");
    return x;
  }
  bool boolean(const char* key, bool def) {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_boolean()) fail(std::string("'") + key + "' must be true or false");
    return v.get<bool>();
  }
  std::optional<Section> sub(const char* key) {
    if (!has(key)) return std::nullopt;
    return Section(at(key), where_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail("unknown key '" + k + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

Vec2 point(const json& p, const std::string& where) {
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
    throw ScenarioError(where + ": points are [x, y]");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

Polygon polygon(const json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where + ": polygon must be a list of points");
  std::vector<Vec2> v;
  for (const auto& p : j) v.push_back(point(p, where));
  try {
    return Polygon(std::move(v));
  } catch (const GeometryError& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

SE2State pose(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(where + ": pose is [x, y, psi]");
  for (const auto& x : j) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) throw ScenarioError(where + ": pose entries must be numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec2& p) { return json::array({p.x, p.y}); }
json to_json(const SE2State& s) { return json::array({s.x, s.y, s.psi}); }
json to_json(const Polygon& poly) {
  json a = json::array();
  for (const auto& p : poly.vertices()) a.push_back(to_json(p));
  return a;
}
json to_json(const BodyVelocity& p) { return json::array({p.vx, p.vy, p.omega}); }

SE2State pose_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Vec2 vec_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
BodyVelocity vel_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

char hex(unsigned v) { return "0123456789abcdef"[v & 15u]; }

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario sc;
  Section root(j, "scenario");
  if (root.integer("schema_version", -1, -1, 1 << 20) != kSchemaVersion) root.fail("unsupported schema_version");
  if (root.has("name")) {
    if (!root.at("name").is_string()) root.fail("'name' must be a string");
    sc.name = root.at("name").get<std::string>();
  }

  {
    Section w(root.at("workspace"), "workspace");
    Polygon bounds = polygon(w.at("bounds"), "workspace.bounds");
    std::vector<Polygon> obstacles;
    if (w.has("obstacles")) {
      const json& obs = w.at("obstacles");
      if (!obs.is_array()) w.fail("'obstacles' must be a list of polygons");
      for (size_t i = 0; i < obs.size(); ++i) obstacles.push_back(polygon(obs[i], "workspace.obstacles[" + std::to_string(i) + "]"));
    }
    const double inflation = w.num("inflation", 0.3, 0.0);
    w.finish();
    sc.workspace = Workspace(std::move(bounds), std::move(obstacles), inflation);
  }
  {
    Section o(root.at("object"), "object");
    sc.object = polygon(o.at("polygon"), "object.polygon");
    sc.mass = o.num("mass", 10.0, 1e-9);
    sc.mu_ground = o.num("mu_ground", 0.5, 1e-9);
    sc.mu_contact = o.num("mu_contact", 0.2, 0.0);
    o.finish();
  }
  if (auto r = root.sub("robots")) {
    sc.robots.count = static_cast<int>(r->integer("count", 3, 1, 16));
    sc.robots.radius = r->num("radius", 0.125, 1e-6);
    sc.robots.f_push_max = r->num("f_push_max", 30.0, 1e-9);
    sc.robots.max_speed = r->num("max_speed", 1.0, 1e-6);
    sc.robots.max_omega = r->num("max_omega", 4.0, 1e-6);
    r->finish();
  }
  sc.start = pose(root.at("start"), "start");
  sc.goal = pose(root.at("goal"), "goal");

  if (auto t = root.sub("tunables")) {
    sc.seed = static_cast<std::uint64_t>(t->integer("seed", 1, 0, (1LL << 62)));
    sc.segment_len = t->num("segment_len", sc.segment_len, 1e-3);
    sc.min_inflation = t->num("min_inflation", sc.min_inflation, 0.0);
    if (t->has("weights")) {
      const json& w = t->at("weights");
      if (!w.is_array() || w.size() != 6) t->fail("'weights' must hold 6 numbers");
      for (size_t i = 0; i < 6; ++i) {
        if (!w[i].is_number() || w[i].get<double>() < 0) t->fail("'weights' must be nonnegative numbers");
        sc.modegen.weights[i] = w[i].get<double>();
      }
    }
    sc.modegen.n_modes = static_cast<int>(t->integer("n_modes", sc.modegen.n_modes, 1, 64));
    sc.modegen.sparsity_weight = t->num("sparsity_weight", sc.modegen.sparsity_weight, 0.0);
    if (auto l = t->sub("lattice")) {
      sc.lattice.xy_step = l->num("xy_step", sc.lattice.xy_step, 1e-3);
      sc.lattice.psi_step = l->num("psi_step", sc.lattice.psi_step, 1e-3, std::numbers::pi);
      sc.lattice.loss_weight = l->num("loss_weight", sc.lattice.loss_weight, 0.0);
      sc.lattice.use_heuristic = l->boolean("use_heuristic", sc.lattice.use_heuristic);
      l->finish();
    }
    if (auto s = t->sub("search")) {
      sc.search.alpha_min = s->num("alpha_min", sc.search.alpha_min, 0.0);
      sc.search.w_t = s->num("w_t", sc.search.w_t, 0.0);
      sc.search.W_k = static_cast<int>(s->integer("W_k", sc.search.W_k, 0, 4));
      sc.search.e_sata = s->num("e_sata", sc.search.e_sata, 1e-6);
      sc.search.robot_speed = s->num("robot_speed", sc.search.robot_speed, 1e-6);
      sc.search.heuristic_floor = s->num("heuristic_floor", sc.search.heuristic_floor, 0.0);
      sc.search.max_nodes = static_cast<size_t>(s->integer("budget_nodes", static_cast<long long>(sc.search.max_nodes), 1, 1LL << 40));
      sc.search.max_seconds = s->num("budget_secs", sc.search.max_seconds, 1e-3);
      s->finish();
    }
    if (auto k = t->sub("tracker")) {
      sc.tracker.horizon = static_cast<int>(k->integer("horizon", sc.tracker.horizon, 1, 1000));
      sc.tracker.dt = k->num("dt", sc.tracker.dt, 1e-4);
      sc.tracker.w_I = k->num("w_I", sc.tracker.w_I, 0.0);
      sc.tracker.K_v = k->num("K_v", sc.tracker.K_v, 0.0);
      sc.tracker.K_psi = k->num("K_psi", sc.tracker.K_psi, 0.0);
      sc.tracker.optimizer_hz = k->num("optimizer_hz", sc.tracker.optimizer_hz, 1e-3);
      sc.tracker.reference_hz = k->num("reference_hz", sc.tracker.reference_hz, 1e-3);
      sc.tracker.clearance_margin = k->num("clearance_margin", sc.tracker.clearance_margin, 0.0);
      sc.tracker.clearance_weight = k->num("clearance_weight", sc.tracker.clearance_weight, 0.0);
      k->finish();
    }
    t->finish();
  }
  sc.search.xy_step = sc.lattice.xy_step;
  sc.search.psi_step = sc.lattice.psi_step;
  if (auto s = root.sub("sim")) {
    sc.sim.rate = s->num("rate", sc.sim.rate, 1.0);
    sc.sim.goal_tolerance = s->num("goal_tolerance", sc.sim.goal_tolerance, 0.0);
    sc.sim.settle_time = s->num("settle_time", sc.sim.settle_time, 0.0);
    sc.sim.switch_tolerance = s->num("switch_tolerance", sc.sim.switch_tolerance, 0.0);
    sc.sim.timeout = s->num("timeout", sc.sim.timeout, 1e-3);
    s->finish();
  }
  if (auto r = root.sub("replan")) {
    sc.replan.deviation_threshold = r->num("deviation_threshold", sc.replan.deviation_threshold, 0.0);
    sc.replan.stuck_window = r->num("stuck_window", sc.replan.stuck_window, 0.0);
    sc.replan.clearance_min = r->num("clearance_min", sc.replan.clearance_min, 0.0);
    sc.replan.max_replans = static_cast<int>(r->integer("max_replans", sc.replan.max_replans, 0, 1000));
    r->finish();
  } else {
    sc.replan.clearance_min = sc.robots.radius;
  }
  if (auto d = root.sub("disturbance")) {
    sc.disturbance.rate = d->num("rate", sc.disturbance.rate, 0.0);
    sc.disturbance.sigma_ratio = d->num("sigma_ratio", sc.disturbance.sigma_ratio, 0.0);
    d->finish();
  }
  root.finish();
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json obstacles = json::array();
  for (const auto& o : sc.workspace.obstacles) obstacles.push_back(to_json(o));
  json weights = json::array();
  for (double w : sc.modegen.weights) weights.push_back(w);
  return {
      {"schema_version", kSchemaVersion},
      {"name", sc.name},
      {"workspace", {{"bounds", to_json(sc.workspace.bounds)}, {"obstacles", obstacles}, {"inflation", sc.workspace.inflation_radius}}},
      {"object", {{"polygon", to_json(sc.object)}, {"mass", sc.mass}, {"mu_ground", sc.mu_ground}, {"mu_contact", sc.mu_contact}}},
      {"robots",
       {{"count", sc.robots.count},
        {"radius", sc.robots.radius},
        {"f_push_max", sc.robots.f_push_max},
        {"max_speed", sc.robots.max_speed},
        {"max_omega", sc.robots.max_omega}}},
      {"start", to_json(sc.start)},
      {"goal", to_json(sc.goal)},
      {"tunables",
       {{"seed", sc.seed},
        {"segment_len", sc.segment_len},
        {"min_inflation", sc.min_inflation},
        {"weights", weights},
        {"n_modes", sc.modegen.n_modes},
        {"sparsity_weight", sc.modegen.sparsity_weight},
        {"lattice",
         {{"xy_step", sc.lattice.xy_step},
          {"psi_step", sc.lattice.psi_step},
          {"loss_weight", sc.lattice.loss_weight},
          {"use_heuristic", sc.lattice.use_heuristic}}},
        {"search",
         {{"alpha_min", sc.search.alpha_min},
          {"w_t", sc.search.w_t},
          {"W_k", sc.search.W_k},
          {"e_sata", sc.search.e_sata},
          {"robot_speed", sc.search.robot_speed},
          {"heuristic_floor", sc.search.heuristic_floor},
          {"budget_nodes", sc.search.max_nodes},
          {"budget_secs", sc.search.max_seconds}}},
        {"tracker",
         {{"horizon", sc.tracker.horizon},
          {"dt", sc.tracker.dt},
          {"w_I", sc.tracker.w_I},
          {"K_v", sc.tracker.K_v},
          {"K_psi", sc.tracker.K_psi},
          {"optimizer_hz", sc.tracker.optimizer_hz},
          {"reference_hz", sc.tracker.reference_hz},
          {"clearance_margin", sc.tracker.clearance_margin},
          {"clearance_weight", sc.tracker.clearance_weight}}}}},
      {"sim",
       {{"rate", sc.sim.rate},
        {"goal_tolerance", sc.sim.goal_tolerance},
        {"settle_time", sc.sim.settle_time},
        {"switch_tolerance", sc.sim.switch_tolerance},
        {"timeout", sc.sim.timeout}}},
      {"replan",
       {{"deviation_threshold", sc.replan.deviation_threshold},
        {"stuck_window", sc.replan.stuck_window},
        {"clearance_min", sc.replan.clearance_min},
        {"max_replans", sc.replan.max_replans}}},
      {"disturbance", {{"rate", sc.disturbance.rate}, {"sigma_ratio", sc.disturbance.sigma_ratio}}},
  };
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario load_scenario(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string scenario_hash(const Scenario& sc) {
  std::uint64_t h = fnv1a(scenario_to_json(sc).dump());
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<size_t>(i)] = hex(static_cast<unsigned>(h));
  return out;
}

json mode_to_json(const InteractionMode& m) {
  json a = json::array();
  for (const auto& cp : m.contacts) {
    a.push_back({{"t", cp.boundary_t},
                 {"position", to_json(cp.position)},
                 {"normal", to_json(cp.normal)},
                 {"tangent", to_json(cp.tangent)},
                 {"f_push_max", cp.f_push_max}});
  }
  return a;
}

InteractionMode mode_from_json(const json& j) {
  InteractionMode m;
  for (const auto& c : j) {
    ContactPoint cp;
    cp.boundary_t = c.at("t").get<double>();
    cp.position = vec_of(c.at("position"));
    cp.normal = vec_of(c.at("normal"));
    cp.tangent = vec_of(c.at("tangent"));
    cp.f_push_max = c.at("f_push_max").get<double>();
    m.contacts.push_back(cp);
  }
  return m;
}

namespace {

json plan_body(const HybridPlan& plan) {
  json kfs = json::array();
  for (const auto& k : plan.keyframes) {
    kfs.push_back({{"state", to_json(k.state)},
                   {"mode", k.mode ? mode_to_json(*k.mode) : json(nullptr)},
                   {"sigma", k.sigma},
                   {"from_sata", k.from_sata}});
  }
  return {{"keyframes", kfs},
          {"segment_costs", plan.segment_costs},
          {"assigned_cost", plan.assigned_cost},
          {"heuristic", plan.heuristic},
          {"mode_switches", plan.mode_switches()},
          {"mode_count", plan.mode_count()},
          {"search",
           {{"expansions", plan.stats.expansions},
            {"generated", plan.stats.generated},
            {"depth_capped", plan.stats.depth_capped},
            {"incumbents", plan.stats.incumbents},
            {"budget_hit", plan.stats.budget_hit}}}};
}

HybridPlan plan_of(const json& j) {
  HybridPlan plan;
  for (const auto& k : j.at("keyframes")) {
    Keyframe kf;
    kf.state = pose_of(k.at("state"));
    if (!k.at("mode").is_null()) kf.mode = mode_from_json(k.at("mode"));
    kf.sigma = k.at("sigma").get<double>();
    kf.from_sata = k.at("from_sata").get<bool>();
    plan.keyframes.push_back(std::move(kf));
  }
  plan.segment_costs = j.at("segment_costs").get<std::vector<double>>();
  plan.assigned_cost = j.at("assigned_cost").get<double>();
  plan.heuristic = j.at("heuristic").get<double>();
  const json& s = j.at("search");
  plan.stats.expansions = s.at("expansions").get<size_t>();
  plan.stats.generated = s.at("generated").get<size_t>();
  plan.stats.depth_capped = s.at("depth_capped").get<size_t>();
  plan.stats.incumbents = s.at("incumbents").get<std::vector<double>>();
  plan.stats.budget_hit = s.at("budget_hit").get<bool>();
  return plan;
}

}  // namespace

json plan_to_json(const PlanFile& pf) {
  json path = json::array();
  for (const auto& s : pf.path.states) path.push_back(to_json(s));
  json j = plan_body(pf.plan);
  j["kind"] = "plan";
  j["schema_version"] = kSchemaVersion;
  j["method"] = pf.method;
  j["scenario_hash"] = pf.scenario_hash;
  j["scenario"] = scenario_to_json(pf.scenario);
  j["guiding_path"] = {{"states", path}, {"cost", pf.path.cost}, {"expansions", pf.path.expansions}};
  j["modegen_seed"] = pf.scenario.seed;
  return j;
}

PlanFile plan_from_json(const json& j) {
  PlanFile pf;
  try {
    if (j.at("kind") != "plan") throw ScenarioError("not a plan file");
    if (j.at("schema_version") != kSchemaVersion) throw ScenarioError("unsupported plan schema_version");
    pf.method = j.at("method").get<std::string>();
    pf.scenario_hash = j.at("scenario_hash").get<std::string>();
    pf.scenario = scenario_from_json(j.at("scenario"));
    for (const auto& s : j.at("guiding_path").at("states")) pf.path.states.push_back(pose_of(s));
    pf.path.cost = j.at("guiding_path").at("cost").get<double>();
    pf.path.expansions = j.at("guiding_path").at("expansions").get<size_t>();
    pf.plan = plan_of(j);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed plan: ") + e.what());
  }
  return pf;
}

void write_log(std::ostream& os, const ExecutionLog& log, const Scenario& sc) {
  json plans = json::array();
  for (const auto& p : log.plans) plans.push_back(plan_body(p));
  const json header{{"kind", "log"},
                    {"schema_version", kSchemaVersion},
                    {"method", log.method},
                    {"seed", log.seed},
                    {"c", log.c},
                    {"dt", log.dt},
                    {"goal", to_json(log.goal)},
                    {"success", log.success},
                    {"reason", log.reason},
                    {"replans", log.replans},
                    {"executed_switches", log.executed_switches},
                    {"records", log.records.size()},
                    {"scenario_hash", scenario_hash(sc)},
                    {"scenario", scenario_to_json(sc)},
                    {"plans", plans}};
  os << header.dump() << '\n';
  for (const auto& r : log.records) {
    json robots = json::array(), cmds = json::array();
    for (const auto& rb : r.robots) robots.push_back(to_json(rb));
    for (const auto& c : r.commands) cmds.push_back(json::array({c.v.x, c.v.y, c.omega}));
    const json line{{"t", r.t},
                    {"phase", phase_name(r.phase)},
                    {"segment", r.segment},
                    {"object", to_json(r.object)},
                    {"reference", to_json(r.reference)},
                    {"robots", robots},
                    {"commands", cmds},
                    {"velocity", to_json(r.velocity)},
                    {"residual", r.residual},
                    {"events", r.events}};
    os << line.dump() << '\n';
  }
}

LoadedLog read_log(std::istream& is) {
  LoadedLog out;
  std::string line;
  if (!std::getline(is, line)) throw ScenarioError("empty log");
  try {
    const json h = json::parse(line);
    if (h.at("kind") != "log") throw ScenarioError("not a log file");
    ExecutionLog& log = out.log;
    log.method = h.at("method").get<std::string>();
    log.seed = h.at("seed").get<std::uint64_t>();
    log.c = h.at("c").get<double>();
    log.dt = h.at("dt").get<double>();
    log.goal = pose_of(h.at("goal"));
    log.success = h.at("success").get<bool>();
    log.reason = h.at("reason").get<std::string>();
    log.replans = h.at("replans").get<int>();
    log.executed_switches = h.at("executed_switches").get<int>();
    out.scenario_hash = h.at("scenario_hash").get<std::string>();
    out.scenario = scenario_from_json(h.at("scenario"));
    for (const auto& p : h.at("plans")) log.plans.push_back(plan_of(p));
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      LogRecord r;
      r.t = j.at("t").get<double>();
      r.phase = j.at("phase") == "switch" ? Phase::Switch : Phase::Push;
      r.segment = j.at("segment").get<size_t>();
      r.object = pose_of(j.at("object"));
      r.reference = pose_of(j.at("reference"));
      for (const auto& rb : j.at("robots")) r.robots.push_back(pose_of(rb));
      for (const auto& c : j.at("commands")) r.commands.push_back({{c.at(0).get<double>(), c.at(1).get<double>()}, c.at(2).get<double>()});
      r.velocity = vel_of(j.at("velocity"));
      r.residual = j.at("residual").get<double>();
      r.events = j.at("events").get<std::vector<std::string>>();
      log.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed log: ") + e.what());
  }
  return out;
}

json metrics_to_json(const Metrics& m) {
  return {{"SR", m.SR}, {"TE", m.TE}, {"CC", m.CC}, {"SM", m.SM}, {"PT", m.PT}, {"ET", m.ET}, {"EE", m.EE}};
}

}  // namespace pushcraft
