#include "pushcraft/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pushcraft {

namespace {

double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

// old-minus-new count in the half circle (phi, phi + 1/2), fractions
int imbalance(const std::vector<double>& a, const std::vector<double>& b, double phi) {
  auto inside = [phi](double t) {
    const double u = frac(t - phi);
    return u > 0.0 && u < 0.5;
  };
  int n = 0;
  for (double t : a) n += inside(t);
  for (double t : b) n -= inside(t);
  return n;
}

SwitchAssignment cyclic_fallback(const std::vector<double>& old_t, const std::vector<double>& new_t) {
  const size_t n = old_t.size();
  std::vector<int> oi(n), ni(n);
  std::iota(oi.begin(), oi.end(), 0);
  std::iota(ni.begin(), ni.end(), 0);
  std::sort(oi.begin(), oi.end(), [&](int a, int b) { return old_t[a] < old_t[b]; });
  std::sort(ni.begin(), ni.end(), [&](int a, int b) { return new_t[a] < new_t[b]; });

  SwitchAssignment best;
  bool best_clean = false;
  double best_len = 1e300;
  for (size_t s = 0; s < n; ++s) {
    SwitchAssignment a;
    a.balanced = false;
    a.target.assign(n, 0);
    a.paths.resize(n);
    for (size_t k = 0; k < n; ++k) {
      const int i = oi[k], j = ni[(k + s) % n];
      double d = frac(new_t[j] - old_t[i]);
      if (d > 0.5) d -= 1.0;
      a.target[i] = j;
      a.paths[i] = {old_t[i], new_t[j], d};
    }
    const bool clean = !paths_cross(a.paths);
    const double len = a.max_fraction();
    if ((clean && !best_clean) || (clean == best_clean && len < best_len - 1e-12)) {
      best = std::move(a);
      best_clean = clean;
      best_len = len;
    }
  }
  return best;
}

}  // namespace

double BoundaryPath::at(double s) const {
  const double m = std::min(std::max(s, 0.0), std::abs(delta));
  return frac(from + (delta >= 0 ? m : -m));
}

double SwitchAssignment::max_fraction() const {
  double m = 0.0;
  for (const auto& p : paths) m = std::max(m, p.length_fraction());
  return m;
}

SwitchAssignment assign_switch(const std::vector<double>& old_in, const std::vector<double>& new_in) {
  if (old_in.size() != new_in.size()) throw std::invalid_argument("mode sizes differ");
  const size_t n = old_in.size();
  std::vector<double> old_t(n), new_t(n);
  for (size_t i = 0; i < n; ++i) old_t[i] = frac(old_in[i]), new_t[i] = frac(new_in[i]);
  SwitchAssignment out;
  if (n == 0) return out;

  // critical diameter positions, folded onto [0, 1/2)
  std::vector<double> crit;
  for (double t : old_t) crit.push_back(std::fmod(t, 0.5));
  for (double t : new_t) crit.push_back(std::fmod(t, 0.5));
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end(), [](double a, double b) { return b - a < 1e-12; }), crit.end());

  double best_w = -1.0, phi = 0.0;
  for (size_t k = 0; k < crit.size(); ++k) {
    const double a = crit[k];
    const double b = k + 1 < crit.size() ? crit[k + 1] : crit[0] + 0.5;
    const double w = b - a;
    if (w <= 1e-12) continue;
    const double mid = std::fmod(a + w / 2, 0.5);
    if (imbalance(old_t, new_t, mid) == 0 && w > best_w + 1e-12) {
      best_w = w;
      phi = mid;
    }
  }
  if (best_w < 0) return cyclic_fallback(old_t, new_t);

  // number both sets by angle from the diameter; each half keeps its own points
  std::vector<int> oi(n), ni(n);
  std::iota(oi.begin(), oi.end(), 0);
  std::iota(ni.begin(), ni.end(), 0);
  auto u = [phi](double t) { return frac(t - phi); };
  std::stable_sort(oi.begin(), oi.end(), [&](int a, int b) { return u(old_t[a]) < u(old_t[b]); });
  std::stable_sort(ni.begin(), ni.end(), [&](int a, int b) { return u(new_t[a]) < u(new_t[b]); });

  out.theta_star = 2 * std::numbers::pi * phi;
  out.target.assign(n, 0);
  out.paths.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const int i = oi[k], j = ni[k];
    out.target[i] = j;
    out.paths[i] = {old_t[i], new_t[j], u(new_t[j]) - u(old_t[i])};
  }
  return out;
}

SwitchAssignment assign_switch(const InteractionMode& from, const InteractionMode& to) {
  std::vector<double> a, b;
  for (const auto& c : from.contacts) a.push_back(c.boundary_t);
  for (const auto& c : to.contacts) b.push_back(c.boundary_t);
  return assign_switch(a, b);
}

bool paths_cross(const std::vector<BoundaryPath>& paths) {
  // relative position of two robots is piecewise linear in time with kinks
  // where either robot stops, so checking the kinks is exact
  for (size_t i = 0; i < paths.size(); ++i) {
    for (size_t j = i + 1; j < paths.size(); ++j) {
      const auto& a = paths[i];
      const auto& b = paths[j];
      const double r0 = frac(b.from - a.from);
      if (r0 < 1e-12) return true;
      const double ta = std::abs(a.delta), tb = std::abs(b.delta);
      for (double tau : {ta, tb}) {
        const double sa = (a.delta >= 0 ? 1 : -1) * std::min(tau, ta);
        const double sb = (b.delta >= 0 ? 1 : -1) * std::min(tau, tb);
        const double r = r0 + sb - sa;
        if (r < 1e-12 || r > 1 - 1e-12) return true;
      }
    }
  }
  return false;
}

std::vector<Vec2> boundary_waypoints(const Polygon& outline, const BoundaryPath& path, double offset,
                                     double spacing) {
  const double perim = outline.perimeter();
  const size_t nv = outline.size();
  std::vector<double> vt(nv);  // vertex fractions
  double acc = 0.0;
  for (size_t i = 0; i < nv; ++i) {
    vt[i] = acc / perim;
    acc += (outline[(i + 1) % nv] - outline[i]).norm();
  }
  auto outward = [&](double t) { return -outline.boundary_inward_normal(t); };
  auto edge_of = [&](double t) {
    size_t e = nv - 1;
    for (size_t i = 0; i + 1 < nv; ++i) {
      if (t < vt[i + 1]) {
        e = i;
        break;
      }
    }
    return e;
  };

  std::vector<Vec2> pts;
  const double total = path.length_fraction();
  const double step = std::max(spacing / perim, 1e-6);
  const int dir = path.delta >= 0 ? 1 : -1;
  double s = 0.0;
  size_t cur_edge = edge_of(path.from);
  for (;;) {
    const double t = path.at(s);
    const size_t e = edge_of(t);
    if (e != cur_edge && !pts.empty()) {
      // crossed a vertex: round the corner if it is convex
      const size_t v = dir > 0 ? e : cur_edge;
      const Vec2 n0 = outward(dir > 0 ? vt[cur_edge] + 1e-9 : vt[e] + 1e-9);
      const Vec2 n1 = outward(dir > 0 ? vt[e] + 1e-9 : vt[cur_edge] + 1e-9);
      const Vec2 na = dir > 0 ? n0 : n1, nb = dir > 0 ? n1 : n0;
      const double turn = std::atan2(na.cross(nb), na.dot(nb));
      if (turn * dir > 0) {
        const double a0 = std::atan2(na.y, na.x);
        const int k = std::max(1, static_cast<int>(std::ceil(std::abs(turn) * offset / spacing)));
        for (int q = 0; q <= k; ++q) {
          const double a = a0 + turn * q / k;
          pts.push_back(outline[v] + Vec2{std::cos(a), std::sin(a)} * offset);
        }
      }
      cur_edge = e;
    }
    pts.push_back(outline.boundary_point(t) + outward(t) * offset);
    if (s >= total) break;
    s = std::min(s + step, total);
  }
  // near a concave corner the offset of one edge lands too close to the next
  for (Vec2& p : pts) {
    for (int it = 0; it < 16; ++it) {
      double d = std::numeric_limits<double>::infinity();
      Vec2 nearest = p;
      for (size_t e = 0; e < nv; ++e) {
        const Vec2 a = outline.edge_start(e), ab = outline.edge_end(e) - a;
        const Vec2 q = a + ab * std::clamp((p - a).dot(ab) / ab.squared_norm(), 0.0, 1.0);
        const double dq = (p - q).norm();
        if (dq < d) d = dq, nearest = q;
      }
      if (d >= offset * (1.0 - 1e-9) || d < 1e-12) break;
      p = nearest + (p - nearest) * (offset / d);
    }
  }
  return pts;
}

}  // namespace pushcraft
