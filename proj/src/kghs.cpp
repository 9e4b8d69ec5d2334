#include "pushcraft/kghs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "pushcraft/switching.hpp"

namespace pushcraft {

PathCurve::PathCurve(std::vector<SE2State> states, double c) : states_(std::move(states)), c_(c) {
  if (states_.empty()) throw std::invalid_argument("empty guiding path");
  cum_.push_back(0.0);
  for (size_t i = 1; i < states_.size(); ++i) {
    double len = 0.0;
    if (se2_distance(states_[i - 1], states_[i], c) > 1e-12) {
      arcs_.push_back(connect_arc(states_[i - 1], states_[i], c));
      len = arc_length(arcs_.back(), c);
    } else {
      arcs_.push_back({states_[i - 1], {}, 0.0, 0.0});
    }
    cum_.push_back(cum_.back() + len);
  }
}

SE2State PathCurve::state_at(double sigma) const {
  if (arcs_.empty() || sigma <= 0.0) return states_.front();
  if (sigma >= length()) return states_.back();
  const size_t i = std::upper_bound(cum_.begin(), cum_.end(), sigma) - cum_.begin() - 1;
  const double len = cum_[i + 1] - cum_[i];
  if (len <= 0.0) return states_[i];
  const auto& a = arcs_[i];
  return a.at((sigma - cum_[i]) / len * a.duration);
}

Vec2 PathCurve::tangent_at(double sigma) const {
  const double h = std::min(1e-4, std::max(length(), 1e-9) * 1e-3);
  const SE2State p = state_at(std::max(0.0, sigma - h)), q = state_at(std::min(length(), sigma + h));
  Vec2 d = q.position() - p.position();
  const double n = d.norm();
  if (n < 1e-12) return rotate({1, 0}, state_at(sigma).psi);
  return d * (1.0 / n);
}

ArcTransition HybridPlan::arc(size_t i, double c) const {
  return connect_arc(keyframes.at(i).state, keyframes.at(i + 1).state, c);
}

int HybridPlan::mode_switches() const {
  int n = 0;
  for (size_t i = 1; i + 1 < keyframes.size(); ++i) {
    const auto& a = keyframes[i - 1].mode;
    const auto& b = keyframes[i].mode;
    if (a && b && !(*a == *b)) ++n;
  }
  return n;
}

int HybridPlan::mode_count() const {
  std::vector<const InteractionMode*> seen;
  for (const auto& k : keyframes) {
    if (!k.mode) continue;
    if (std::none_of(seen.begin(), seen.end(), [&](const InteractionMode* m) { return *m == *k.mode; })) {
      seen.push_back(&*k.mode);
    }
  }
  return static_cast<int>(seen.size());
}

double switch_time(const InteractionMode& a, const InteractionMode& b, double perimeter, double robot_speed) {
  if (a == b || a.size() == 0) return 0.0;
  return assign_switch(a, b).max_fraction() * perimeter / robot_speed;
}

namespace {

// min clearance over the sampled arc, stopping early once below `floor`
double arc_clearance(const SE2State& a, const SE2State& b, const Shape& shape, const Workspace& ws, double c,
                     double spacing, double floor) {
  if (se2_distance(a, b, c) < 1e-12) return clearance(shape, a, ws);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : sample_arc(connect_arc(a, b, c), c, spacing)) {
    m = std::min(m, clearance(shape, s, ws));
    if (m <= floor) break;
  }
  return m;
}

}  // namespace

SplitChoice select_split(const PathCurve& curve, const SE2State& a, double sigma_a, const SE2State& b,
                         double sigma_b, const Shape& shape, const Workspace& ws, const SearchConfig& cfg) {
  const double c = curve.c();
  const double mid = 0.5 * (sigma_a + sigma_b);
  const double span = sigma_b - sigma_a;
  std::vector<double> cand;
  if (span > 1e-9) {
    const int n = std::max(2, static_cast<int>(std::ceil(span / (cfg.alpha_min / 2))));
    for (int i = 1; i < n; ++i) cand.push_back(sigma_a + span * i / n);
    for (double v : curve.vertex_sigma()) {
      if (v > sigma_a + 1e-9 && v < sigma_b - 1e-9) cand.push_back(v);
    }
    cand.push_back(mid);
    std::sort(cand.begin(), cand.end());
  }

  SplitChoice best{curve.state_at(mid), mid, -1.0};
  double best_off = std::numeric_limits<double>::infinity();
  for (double sg : cand) {
    const SE2State s = curve.state_at(sg);
    const double da = se2_distance(s, a, c), db = se2_distance(s, b, c);
    if (da < 1e-9 || db < 1e-9) continue;
    if ((da - cfg.alpha_min) * (db - cfg.alpha_min) <= 0.0) continue;
    const double floor = best.clearance;
    double cl = arc_clearance(a, s, shape, ws, c, cfg.sweep_spacing, floor);
    if (cl > floor - 1e-9) cl = std::min(cl, arc_clearance(s, b, shape, ws, c, cfg.sweep_spacing, floor));
    const double off = std::abs(sg - mid);
    if (cl > best.clearance + 1e-9 || (cl > best.clearance - 1e-9 && off < best_off)) {
      best = {s, sg, cl};
      best_off = off;
    }
  }
  if (best.clearance < 0.0) best.clearance = 0.0;
  return best;
}

namespace {

struct SearchNode {
  std::vector<Keyframe> kf;
  double cost = 0.0;       // assigned part
  double heuristic = 0.0;  // unassigned part
  std::vector<double> seg_cost;
  int depth = 0;

  size_t first_unassigned() const {
    for (size_t i = 0; i + 1 < kf.size(); ++i) {
      if (!kf[i].mode) return i;
    }
    return kf.size();
  }
  size_t unassigned() const {
    size_t n = 0;
    for (size_t i = 0; i + 1 < kf.size(); ++i) n += !kf[i].mode;
    return n;
  }
};

class Search {
 public:
  Search(const PathCurve& curve, const SearchConfig& cfg, ModeLibrary& modes, const Workspace& ws,
         const SufficiencyReport& witness)
      : curve_(curve), cfg_(cfg), lib_(modes), intr_(modes.intrinsics()), ws_(ws), witness_(witness),
        c_(intr_.c()), perimeter_(intr_.shape.outline.perimeter()) {}

  HybridPlan run() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& st = curve_.states();
    SearchNode root;
    root.kf = {{st.front(), std::nullopt, 0.0, false}, {st.back(), std::nullopt, curve_.length(), false}};
    root.heuristic = heuristic(root);
    const int depth_cap = static_cast<int>(std::ceil(2.0 * std::max(curve_.length(), cfg_.alpha_min) / cfg_.alpha_min));

    std::optional<SearchNode> best;
    std::optional<SearchNode> next = std::move(root);  // greedy dive target
    std::vector<SearchNode> store;
    using Item = std::tuple<double, size_t, long long, size_t>;  // f, unassigned, order, index
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    long long order = 0;

    for (;;) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (stats_.expansions >= cfg_.max_nodes || secs > cfg_.max_seconds) {
        stats_.budget_hit = true;
        break;
      }
      SearchNode cur;
      if (next) {
        cur = std::move(*next);
        next.reset();
      } else {
        bool found = false;
        while (!open.empty()) {
          const size_t idx = std::get<3>(open.top());
          open.pop();
          if (best && store[idx].cost >= best->cost - 1e-12) continue;
          cur = std::move(store[idx]);
          found = true;
          break;
        }
        if (!found) break;
      }
      if (cur.depth >= depth_cap) {
        ++stats_.depth_capped;
        continue;
      }
      ++stats_.expansions;
      std::vector<SearchNode> children = expand(cur);
      const bool diving = !best;
      std::stable_sort(children.begin(), children.end(), [diving](const SearchNode& x, const SearchNode& y) {
        if (diving && x.unassigned() != y.unassigned()) return x.unassigned() < y.unassigned();
        const double fx = x.cost + x.heuristic, fy = y.cost + y.heuristic;
        if (fx != fy) return fx < fy;
        return x.unassigned() < y.unassigned();
      });
      for (auto& ch : children) {
        ++stats_.generated;
        if (ch.first_unassigned() == ch.kf.size()) {
          if (!best || ch.cost < best->cost - 1e-12) {
            stats_.incumbents.push_back(ch.cost);
            best = std::move(ch);
          }
          continue;
        }
        if (best && ch.cost >= best->cost - 1e-12) continue;
        if (!best && !next) {
          next = std::move(ch);
          continue;
        }
        store.push_back(std::move(ch));
        const auto& n = store.back();
        open.emplace(n.cost + n.heuristic, n.unassigned(), order++, store.size() - 1);
      }
    }
    stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!best) throw NoFeasiblePlan();
    HybridPlan plan;
    plan.keyframes = std::move(best->kf);
    plan.segment_costs = std::move(best->seg_cost);
    plan.assigned_cost = best->cost;
    plan.heuristic = 0.0;
    plan.stats = stats_;
    return plan;
  }

 private:
  double heuristic(const SearchNode& n) const {
    double h = 0.0;
    for (size_t i = 0; i + 1 < n.kf.size(); ++i) {
      if (!n.kf[i].mode) h += gen_length(n.kf[i].state, n.kf[i + 1].state);
    }
    return cfg_.heuristic_floor * h;
  }

  double gen_length(const SE2State& a, const SE2State& b) const {
    if (se2_distance(a, b, c_) < 1e-12) return 0.0;
    return arc_length(connect_arc(a, b, c_), c_);
  }

  bool arc_free(const SE2State& a, const SE2State& b) const {
    if (se2_distance(a, b, c_) < 1e-12) return !collides(intr_.shape, a, ws_);
    return arc_collision_free(connect_arc(a, b, c_), intr_.shape, ws_, c_, cfg_.sweep_spacing);
  }

  double switch_cost(const SearchNode& n, size_t l, const InteractionMode& m) const {
    if (l == 0 || !n.kf[l - 1].mode) return 0.0;
    return cfg_.w_t * switch_time(*n.kf[l - 1].mode, m, perimeter_, cfg_.robot_speed);
  }

  std::vector<SearchNode> expand(const SearchNode& n) {
    const size_t l = n.first_unassigned();
    const Keyframe& a = n.kf[l];
    const Keyframe& b = n.kf[l + 1];
    std::vector<SearchNode> out;
    if (se2_distance(a.state, b.state, c_) < 1e-12) return out;

    if (arc_free(a.state, b.state)) {
      const ArcTransition arc = connect_arc(a.state, b.state, c_);
      const auto& entry = lib_.get(arc.velocity);
      for (const auto& m : entry.modes) {
        if (!velocity_allowed(m, arc.velocity, intr_)) continue;
        SearchNode ch = n;
        ch.kf[l].mode = m;
        const double sc = arc_loss(m, arc, intr_, lib_.config().weights) + switch_cost(n, l, m);
        ch.seg_cost.push_back(sc);
        ch.cost += sc;
        ch.heuristic = heuristic(ch);
        ch.depth = n.depth + 1;
        out.push_back(std::move(ch));
      }
      if (!out.empty()) return out;
      // splitting may find allowed arcs far cheaper than a long SATA chain
      out = insert_children(n, l);
      if (auto s = sata_child(n, l, arc)) out.push_back(std::move(*s));
      return out;
    }
    return insert_children(n, l);
  }

  std::optional<SearchNode> sata_child(const SearchNode& n, size_t l, const ArcTransition& arc) {
    if (!witness_.sufficient) return std::nullopt;
    SataResult res;
    try {
      res = sata(arc, cfg_.e_sata, witness_, intr_, cfg_.sata_spacing);
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
    for (const auto& pc : res.pieces) {
      if (!arc_collision_free(pc.arc, intr_.shape, ws_, c_, cfg_.sweep_spacing)) return std::nullopt;
    }
    SearchNode ch;
    ch.kf.assign(n.kf.begin(), n.kf.begin() + l);
    ch.seg_cost = n.seg_cost;
    ch.cost = n.cost;
    const double s0 = n.kf[l].sigma, s1 = n.kf[l + 1].sigma;
    for (size_t i = 0; i < res.pieces.size(); ++i) {
      const auto& pc = res.pieces[i];
      Keyframe k{pc.arc.start, pc.mode, s0 + (s1 - s0) * i / res.pieces.size(), true};
      if (i == 0) k.state = n.kf[l].state;
      double sc = arc_loss(pc.mode, pc.arc, intr_, lib_.config().weights);
      if (!ch.kf.empty() && ch.kf.back().mode) {
        sc += cfg_.w_t * switch_time(*ch.kf.back().mode, pc.mode, perimeter_, cfg_.robot_speed);
      }
      ch.kf.push_back(std::move(k));
      ch.seg_cost.push_back(sc);
      ch.cost += sc;
    }
    ch.kf.insert(ch.kf.end(), n.kf.begin() + l + 1, n.kf.end());
    ch.heuristic = heuristic(ch);
    ch.depth = n.depth + 1;
    return ch;
  }

  std::vector<SearchNode> insert_children(const SearchNode& n, size_t l) {
    const Keyframe& a = n.kf[l];
    const Keyframe& b = n.kf[l + 1];
    std::vector<SearchNode> out;
    const SplitChoice sp = select_split(curve_, a.state, a.sigma, b.state, b.sigma, intr_.shape, ws_, cfg_);
    if (se2_distance(sp.state, a.state, c_) < 1e-9 || se2_distance(sp.state, b.state, c_) < 1e-9) return out;

    std::vector<SE2State> options{sp.state};
    const Vec2 lat = curve_.tangent_at(sp.sigma).perp();
    const SE2State& s = sp.state;
    const std::array<SE2State, 4> perturbed{
        SE2State(s.x + lat.x * cfg_.xy_step / 2, s.y + lat.y * cfg_.xy_step / 2, s.psi),
        SE2State(s.x - lat.x * cfg_.xy_step / 2, s.y - lat.y * cfg_.xy_step / 2, s.psi),
        SE2State(s.x, s.y, s.psi + cfg_.psi_step / 2), SE2State(s.x, s.y, s.psi - cfg_.psi_step / 2)};
    for (int k = 0; k < std::min(cfg_.W_k, 4); ++k) {
      const SE2State& p = perturbed[k];
      if (collides(intr_.shape, p, ws_)) continue;
      if (!arc_free(a.state, p)) continue;  // local reachability
      options.push_back(p);
    }
    for (const auto& st : options) {
      SearchNode ch = n;
      ch.kf.insert(ch.kf.begin() + l + 1, Keyframe{st, std::nullopt, sp.sigma, false});
      ch.heuristic = heuristic(ch);
      ch.depth = n.depth + 1;
      out.push_back(std::move(ch));
    }
    return out;
  }

  const PathCurve& curve_;
  const SearchConfig& cfg_;
  ModeLibrary& lib_;
  const ObjectIntrinsics& intr_;
  const Workspace& ws_;
  const SufficiencyReport& witness_;
  double c_;
  double perimeter_;
  SearchStats stats_;
};

}  // namespace

HybridPlan kghs_search(const GuidingPath& path, const SearchConfig& cfg, ModeLibrary& modes, const Workspace& ws,
                       const SufficiencyReport& witness) {
  if (path.states.empty()) throw std::invalid_argument("empty guiding path");
  PathCurve curve(path.states, modes.intrinsics().c());
  Search search(curve, cfg, modes, ws, witness);
  return search.run();
}

}  // namespace pushcraft
