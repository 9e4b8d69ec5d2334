#include "pushcraft/modegen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "pushcraft/lp.hpp"

namespace pushcraft {

Vec2 robot_center(const ContactPoint& cp, double radius) { return cp.position - cp.normal * radius; }

CandidateSet candidate_contacts(const ObjectIntrinsics& intr, double robot_radius, double segment_len,
                                double f_push_max, const Workspace* ws, std::span<const SE2State> pose_samples) {
  if (!(segment_len > 0)) throw std::invalid_argument("segment length must be positive");
  const Polygon& outline = intr.shape.outline;
  const double perim = outline.perimeter();
  CandidateSet out;
  double walked = 0.0;
  for (size_t e = 0; e < outline.size(); ++e) {
    const double len = (outline.edge_end(e) - outline.edge_start(e)).norm();
    const int nv = std::max(1, static_cast<int>(std::ceil(len / segment_len - 1e-9)));
    int kept = 0;
    for (int k = 0; k < nv; ++k) {
      const double s = walked + len * (k + 0.5) / nv;
      ContactPoint cp = ContactPoint::on_boundary(outline, s / perim, f_push_max);
      const Vec2 rc = robot_center(cp, robot_radius);

      // the robot disc must not dig into another part of the object
      double self = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < outline.size(); ++j) {
        self = std::min(self, point_segment_distance(rc, outline.edge_start(j), outline.edge_end(j)));
      }
      if (self < robot_radius - 1e-9 || outline.contains(rc)) continue;

      if (ws && !pose_samples.empty()) {
        bool reachable = false;
        for (const auto& pose : pose_samples) {
          if (!disc_collides(pose.transform(rc), robot_radius, *ws)) {
            reachable = true;
            break;
          }
        }
        if (!reachable) continue;
      }
      out.points.push_back(cp);
      ++kept;
    }
    out.per_edge.push_back(kept);
    walked += len;
  }
  if (out.points.empty()) throw std::runtime_error("object unreachable");
  return out;
}

bool contacts_spaced(const ContactPoint& a, const ContactPoint& b, double perimeter, double robot_radius) {
  const double diameter = 2.0 * robot_radius;
  double dt = std::abs(a.boundary_t - b.boundary_t);
  dt = std::min(dt, 1.0 - dt) * perimeter;
  if (dt < diameter - 1e-9) return false;
  return (robot_center(a, robot_radius) - robot_center(b, robot_radius)).norm() >= diameter - 1e-9;
}

bool mode_spaced(const InteractionMode& mode, double perimeter, double robot_radius) {
  for (size_t i = 0; i < mode.size(); ++i) {
    for (size_t j = i + 1; j < mode.size(); ++j) {
      if (!contacts_spaced(mode.contacts[i], mode.contacts[j], perimeter, robot_radius)) return false;
    }
  }
  return true;
}

namespace {

InteractionMode make_mode(const CandidateSet& cands, std::vector<int> rows) {
  std::sort(rows.begin(), rows.end(), [&](int a, int b) {
    return cands.points[a].boundary_t < cands.points[b].boundary_t;
  });
  InteractionMode m;
  for (int r : rows) m.contacts.push_back(cands.points[r]);
  return m;
}

bool fits(const CandidateSet& cands, const std::vector<int>& chosen, int row, double perim, double radius) {
  for (int c : chosen) {
    if (!contacts_spaced(cands.points[c], cands.points[row], perim, radius)) return false;
  }
  return true;
}

}  // namespace

ModeGenResult mg_so(const CandidateSet& cands, const BodyVelocity& p, const ObjectIntrinsics& intr,
                    const ModeGenConfig& cfg) {
  const int nv = static_cast<int>(cands.points.size());
  if (cfg.n_robots < 1 || cfg.n_robots > nv) throw std::invalid_argument("more robots than contact candidates");
  const auto dirs = spanning_directions(p, intr);
  const double mu = intr.mu_contact;
  const double lam = cfg.sparsity_weight;

  std::vector<int> active;
  for (int d = 0; d < 6; ++d) {
    if (cfg.weights[d] > 0) active.push_back(d);
  }

  lp::Problem prob;
  std::vector<int> t(nv);
  for (int i = 0; i < nv; ++i) t[i] = prob.add_variable(0, lp::kInf, lam);

  struct Cols { int fn, tp, tm; };
  std::vector<std::vector<Cols>> cols(6, std::vector<Cols>(nv));
  for (int d : active) {
    const double w = cfg.weights[d];
    const GeneralizedForce eta = friction_force(dirs[d], intr);
    std::vector<std::vector<lp::Term>> rows(3);
    for (int i = 0; i < nv; ++i) {
      const auto& cp = cands.points[i];
      Cols c{prob.add_variable(0, cp.f_push_max, lam), prob.add_variable(0, lp::kInf, lam),
             prob.add_variable(0, lp::kInf, lam)};
      cols[d][i] = c;
      prob.add_constraint({{c.tp, 1}, {c.tm, 1}, {c.fn, -mu}}, lp::Sense::LessEqual, 0);
      prob.add_constraint({{c.fn, 1}, {t[i], -1}}, lp::Sense::LessEqual, 0);
      prob.add_constraint({{c.tp, 1}, {c.tm, 1}, {t[i], -1}}, lp::Sense::LessEqual, 0);
      const double tq_n = cp.position.cross(cp.normal), tq_t = cp.position.cross(cp.tangent);
      const double colN[3] = {cp.normal.x, cp.normal.y, tq_n};
      const double colT[3] = {cp.tangent.x, cp.tangent.y, tq_t};
      for (int r = 0; r < 3; ++r) {
        if (colN[r] != 0) rows[r].push_back({c.fn, colN[r]});
        if (colT[r] != 0) {
          rows[r].push_back({c.tp, colT[r]});
          rows[r].push_back({c.tm, -colT[r]});
        }
      }
    }
    const double target[3] = {-eta.fx, -eta.fy, -eta.torque};
    for (int r = 0; r < 3; ++r) {
      const int rp = prob.add_variable(0, lp::kInf, w);
      const int rm = prob.add_variable(0, lp::kInf, w);
      rows[r].push_back({rp, -1});
      rows[r].push_back({rm, 1});
      prob.add_constraint(std::move(rows[r]), lp::Sense::Equal, target[r]);
    }
  }

  const lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::Optimal) throw lp::LpError(sol.status, "mode generation LP failed");

  ModeGenResult res;
  res.objective = sol.objective;
  res.force_matrix = Eigen::MatrixXd::Zero(nv, 12);
  res.row_scores.assign(nv, 0.0);
  for (int i = 0; i < nv; ++i) {
    double inf = 0.0, one = 0.0;
    for (int d : active) {
      const auto& c = cols[d][i];
      const double fn = sol.x[c.fn], ft = sol.x[c.tp] - sol.x[c.tm];
      res.force_matrix(i, 2 * d) = fn;
      res.force_matrix(i, 2 * d + 1) = ft;
      inf = std::max({inf, fn, std::abs(ft)});
      one += fn + std::abs(ft);
    }
    // values below the LP tolerance count as zero
    res.row_scores[i] = inf + one < kTolLp ? 0.0 : inf + one;
  }

  std::vector<int> order(nv);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return res.row_scores[a] > res.row_scores[b]; });

  const double perim = intr.shape.outline.perimeter();
  const int N = cfg.n_robots;
  std::vector<int> first;
  for (int r : order) {
    if (static_cast<int>(first.size()) == N) break;
    if (fits(cands, first, r, perim, cfg.robot_radius)) first.push_back(r);
  }
  if (static_cast<int>(first.size()) < N) throw std::runtime_error("no spaced mode among the candidates");
  res.modes.push_back(make_mode(cands, first));

  // Variants keep the N-1 strongest contacts and draw the last one.
  std::vector<int> base(first.begin(), first.end() - 1);
  std::vector<int> pool;
  for (int r : order) {
    if (std::find(first.begin(), first.end(), r) == first.end() && fits(cands, base, r, perim, cfg.robot_radius)) {
      pool.push_back(r);
    }
  }
  std::mt19937_64 rng(cfg.seed);
  while (static_cast<int>(res.modes.size()) < cfg.n_modes && !pool.empty()) {
    const size_t k = static_cast<size_t>(rng() % pool.size());
    const int r = pool[k];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    auto rows = base;
    rows.push_back(r);
    InteractionMode m = make_mode(cands, rows);
    if (std::find(res.modes.begin(), res.modes.end(), m) == res.modes.end()) res.modes.push_back(std::move(m));
  }
  return res;
}

ModeLibrary::ModeLibrary(const ObjectIntrinsics& intr, CandidateSet cands, ModeGenConfig cfg)
    : intr_(&intr), cands_(std::move(cands)), cfg_(cfg) {}

const ModeLibrary::Entry& ModeLibrary::get(const BodyVelocity& p) {
  const double c = intr_->c();
  const double n = p.weighted_norm(c);
  const std::array<long long, 3> key{std::llround(p.vx / n * 1e7), std::llround(p.vy / n * 1e7),
                                     std::llround(c * p.omega / n * 1e7)};
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  Entry e;
  const BodyVelocity dir{key[0] * 1e-7, key[1] * 1e-7, key[2] * 1e-7 / c};
  e.modes = mg_so(cands_, dir, *intr_, cfg_).modes;
  for (size_t i = 0; i < e.modes.size(); ++i) {
    e.jmf.push_back(multi_feasibility(e.modes[i], dir, *intr_, cfg_.weights));
    if (e.jmf[i] < e.jmf[e.best]) e.best = i;
  }
  return cache_.emplace(key, std::move(e)).first->second;
}

std::array<BodyVelocity, 6> key_velocities(const ObjectIntrinsics& intr) {
  return spanning_directions({1, 0, 0}, intr);
}

SufficiencyReport check_sufficient(const ModeGenerator& generate, const ObjectIntrinsics& intr) {
  const auto keys = key_velocities(intr);
  std::vector<InteractionMode> pool;
  for (const auto& k : keys) {
    for (auto& m : generate(k)) {
      if (std::find(pool.begin(), pool.end(), m) == pool.end()) pool.push_back(std::move(m));
    }
  }
  SufficiencyReport rep;
  rep.sufficient = !pool.empty();
  for (size_t i = 0; i < keys.size(); ++i) {
    Witness w;
    w.key = keys[i];
    w.value = std::numeric_limits<double>::infinity();
    for (const auto& m : pool) {
      const double v = feasibility(m, keys[i], intr);
      if (v < w.value) {
        w.value = v;
        w.mode = m;
      }
    }
    rep.sufficient = rep.sufficient && w.value <= kTolLp;
    rep.witnesses[i] = std::move(w);
  }
  return rep;
}

SufficiencyReport check_sufficient(const CandidateSet& cands, const ObjectIntrinsics& intr, const ModeGenConfig& cfg) {
  return check_sufficient([&](const BodyVelocity& k) { return mg_so(cands, k, intr, cfg).modes; }, intr);
}

namespace {

// Arc moving with key velocity `key` until the body displacement `amount`
// (metres, or radians for the rotation keys) is covered.
ArcTransition key_arc(const SE2State& from, const BodyVelocity& key, double amount, double c) {
  const double rate = std::max(std::hypot(key.vx, key.vy), c * std::abs(key.omega));
  const BodyVelocity v = key * (kNominalSpeed / rate);
  const double comp = std::abs(v.vx) + std::abs(v.vy) + std::abs(v.omega);  // single nonzero entry
  ArcTransition arc;
  arc.start = from;
  arc.velocity = v;
  arc.duration = std::abs(amount) / comp;
  arc.delta_psi = wrap_angle(v.omega * arc.duration);
  return arc;
}

std::vector<SE2State> sample_pieces(const std::vector<SataPiece>& pieces, double c, double spacing) {
  std::vector<SE2State> out;
  for (const auto& pc : pieces) {
    auto s = sample_arc(pc.arc, c, spacing);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace

SataResult sata_fixed(const ArcTransition& arc, int L, const SufficiencyReport& witness, const ObjectIntrinsics& intr,
                      double sample_spacing) {
  if (!witness.sufficient) throw InsufficientModes();
  const double c = intr.c();
  SataResult res;
  res.segments = L;
  SE2State cur = arc.start;
  for (int k = 1; k <= L; ++k) {
    const SE2State goal = k == L ? arc.end() : arc.at(arc.duration * k / L);
    const Vec2 d = rotate(goal.position() - cur.position(), -cur.psi);
    const double amounts[3] = {d.x, d.y, wrap_angle(goal.psi - cur.psi)};
    for (int axis = 0; axis < 3; ++axis) {
      if (std::abs(amounts[axis]) <= 1e-12) continue;
      const int key = amounts[axis] > 0 ? axis : axis + 3;
      SataPiece pc;
      pc.key_index = key;
      pc.mode = witness.witnesses[key].mode;
      pc.arc = key_arc(cur, witness.witnesses[key].key, amounts[axis], c);
      cur = pc.arc.end();
      res.pieces.push_back(std::move(pc));
    }
    cur = goal;  // removes round-off; the pieces end here analytically
  }
  const auto original = sample_arc(arc, c, sample_spacing);
  const auto approx = sample_pieces(res.pieces, c, sample_spacing);
  res.hausdorff = approx.empty() ? 0.0 : hausdorff(original, approx, c);
  return res;
}

SataResult sata(const ArcTransition& arc, double e, const SufficiencyReport& witness, const ObjectIntrinsics& intr,
                double sample_spacing, int max_segments) {
  if (!witness.sufficient) throw InsufficientModes();
  for (const auto& w : witness.witnesses) {
    if (velocity_allowed(w.mode, arc.velocity, intr)) {
      SataResult res;
      res.segments = 1;
      res.pieces.push_back({arc, -1, w.mode});
      return res;
    }
  }
  for (int L = 1; L <= max_segments; L *= 2) {
    SataResult res = sata_fixed(arc, L, witness, intr, sample_spacing);
    if (res.hausdorff <= e) return res;
  }
  throw std::runtime_error("trajectory approximation did not reach the tolerance");
}

}  // namespace pushcraft
