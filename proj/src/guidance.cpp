#include "pushcraft/guidance.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <unordered_map>

namespace pushcraft {

std::vector<Motion> LatticeConfig::default_motions() {
  std::vector<Motion> m;
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx == 0 && dy == 0) continue;
      for (int dp = -1; dp <= 1; ++dp) m.push_back({dx, dy, dp});
    }
  }
  m.push_back({0, 0, 1});
  m.push_back({0, 0, -1});
  return m;
}

double edge_cost(const ArcTransition& arc, ModeLibrary& modes, const LatticeConfig& cfg) {
  const double c = modes.intrinsics().c();
  const double chord = se2_distance(arc.start, arc.end(), c);
  if (cfg.loss_weight == 0.0) return chord;
  return chord + cfg.loss_weight * modes.get(arc.velocity).best_jmf() * arc_length(arc, c);
}

void precompute_edge_losses(ModeLibrary& modes, const LatticeConfig& cfg) {
  const int H = static_cast<int>(std::lround(2 * std::numbers::pi / cfg.psi_step));
  const double c = modes.intrinsics().c();
  for (int h = 0; h < H; ++h) {
    const SE2State from(0, 0, h * cfg.psi_step);
    for (const auto& m : cfg.motions) {
      const SE2State to(m.dx * cfg.xy_step, m.dy * cfg.xy_step, (h + m.dpsi) * cfg.psi_step);
      modes.get(connect_arc(from, to, c).velocity);
    }
  }
}

namespace {

struct Node {
  SE2State state;
  int ix = 0, iy = 0, ih = 0;
  double g = std::numeric_limits<double>::infinity();
  int parent = -1;
  double parent_edge = 0.0;
  bool closed = false;
};

}  // namespace

GuidingPath find_guiding_path(const SE2State& start, const SE2State& goal, const Workspace& ws,
                              ModeLibrary& modes, const LatticeConfig& cfg) {
  const ObjectIntrinsics& intr = modes.intrinsics();
  const Shape& shape = intr.shape;
  const double c = intr.c();
  if (collides(shape, start, ws)) throw NoGuidingPath("start pose collides");
  if (collides(shape, goal, ws)) throw NoGuidingPath("goal pose collides");

  const int H = static_cast<int>(std::lround(2 * std::numbers::pi / cfg.psi_step));
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& v : ws.bounds.vertices()) {
    xmin = std::min(xmin, v.x), xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y), ymax = std::max(ymax, v.y);
  }
  const double goal_radius = std::hypot(std::sqrt(2.0) * cfg.xy_step, c * cfg.psi_step);

  std::vector<Node> nodes;
  std::unordered_map<long long, int> index;
  auto key = [H](int ix, int iy, int ih) {
    return ((static_cast<long long>(ix) + 100000) * 200001 + (iy + 100000)) * H + ((ih % H) + H) % H;
  };
  std::unordered_map<long long, bool> free_cache;

  auto heuristic = [&](const SE2State& s) { return cfg.use_heuristic ? se2_distance(s, goal, c) : 0.0; };

  using Item = std::tuple<double, long long, int>;  // f, insertion order, node
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  long long counter = 0;

  nodes.push_back({start, 0, 0, static_cast<int>(std::lround(start.psi / cfg.psi_step)), 0.0, -1, 0.0, false});
  const int goal_id = 1;
  nodes.push_back({goal, 0, 0, 0, std::numeric_limits<double>::infinity(), -1, 0.0, false});
  open.emplace(heuristic(start), counter++, 0);

  auto relax = [&](int from, int to, double cost) {
    const double g = nodes[from].g + cost;
    if (g < nodes[to].g - 1e-12) {
      nodes[to].g = g;
      nodes[to].parent = from;
      nodes[to].parent_edge = cost;
      open.emplace(g + heuristic(nodes[to].state), counter++, to);
    }
  };

  size_t expansions = 0;
  while (!open.empty()) {
    auto [f, order, id] = open.top();
    (void)order;
    open.pop();
    if (nodes[id].closed) continue;
    nodes[id].closed = true;
    ++expansions;
    if (id == goal_id) break;
    const Node cur = nodes[id];

    // direct connection to the goal from nearby states
    if (se2_distance(cur.state, goal, c) <= goal_radius) {
      if (se2_distance(cur.state, goal, c) < 1e-12) {
        relax(id, goal_id, 0.0);
      } else {
        const ArcTransition arc = connect_arc(cur.state, goal, c);
        if (arc_collision_free(arc, shape, ws, c, cfg.sweep_spacing)) relax(id, goal_id, edge_cost(arc, modes, cfg));
      }
    }

    for (const auto& m : cfg.motions) {
      const int ix = cur.ix + m.dx, iy = cur.iy + m.dy, ih = cur.ih + m.dpsi;
      const SE2State next(start.x + ix * cfg.xy_step, start.y + iy * cfg.xy_step, ih * cfg.psi_step);
      if (next.x < xmin || next.x > xmax || next.y < ymin || next.y > ymax) continue;
      const long long k = key(ix, iy, ih);
      auto fit = free_cache.find(k);
      if (fit == free_cache.end()) fit = free_cache.emplace(k, !collides(shape, next, ws)).first;
      if (!fit->second) continue;
      auto nit = index.find(k);
      int to;
      if (nit == index.end()) {
        to = static_cast<int>(nodes.size());
        nodes.push_back({next, ix, iy, ((ih % H) + H) % H});
        index.emplace(k, to);
      } else {
        to = nit->second;
        if (nodes[to].closed) continue;
      }
      const ArcTransition arc = connect_arc(cur.state, next, c);
      const double cost = edge_cost(arc, modes, cfg);
      if (nodes[id].g + cost >= nodes[to].g - 1e-12) continue;
      if (!arc_collision_free(arc, shape, ws, c, cfg.sweep_spacing)) continue;
      relax(id, to, cost);
    }
  }

  if (!nodes[goal_id].closed) throw NoGuidingPath("search space exhausted");
  GuidingPath path;
  path.expansions = expansions;
  std::vector<int> chain;
  for (int v = goal_id; v >= 0; v = nodes[v].parent) chain.push_back(v);
  std::reverse(chain.begin(), chain.end());
  for (size_t i = 0; i < chain.size(); ++i) {
    path.states.push_back(nodes[chain[i]].state);
    if (i > 0) path.edge_costs.push_back(nodes[chain[i]].parent_edge);
  }
  path.cost = nodes[goal_id].g;
  return path;
}

}  // namespace pushcraft
