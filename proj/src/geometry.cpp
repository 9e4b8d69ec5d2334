#include "pushcraft/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pushcraft {

namespace {

constexpr double kPi = std::numbers::pi;

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return (b - a).cross(c - a); }

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

double ring_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) a += v[i].cross(v[(i + 1) % v.size()]);
  return 0.5 * a;
}

}  // namespace

double wrap_angle(double a) {
  if (!std::isfinite(a)) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0) r += 2.0 * kPi;
  r -= kPi;
  if (r >= kPi) r -= 2.0 * kPi;
  return r;
}

double se2_distance(const SE2State& a, const SE2State& b, double angle_weight) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  const double dp = angle_weight * wrap_angle(a.psi - b.psi);
  return std::sqrt(dx * dx + dy * dy + dp * dp);
}

Polygon::Polygon(std::vector<Vec2> vertices) : v_(std::move(vertices)) {
  if (v_.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
  for (const auto& p : v_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("polygon vertex not finite");
  }
  const size_t n = v_.size();
  for (size_t i = 0; i < n; ++i) {
    if ((v_[(i + 1) % n] - v_[i]).norm() <= 1e-12) throw GeometryError("polygon has a zero-length edge");
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v_[i], v_[(i + 1) % n], v_[j], v_[(j + 1) % n])) {
        throw GeometryError("polygon is not simple");
      }
    }
  }
  const double a = ring_area(v_);
  if (std::abs(a) <= 1e-12) throw GeometryError("polygon has zero area");
  if (a < 0) std::reverse(v_.begin(), v_.end());
}

Polygon Polygon::trusted(std::vector<Vec2> vertices) {
  Polygon p;
  p.v_ = std::move(vertices);
  return p;
}

double Polygon::signed_area() const { return ring_area(v_); }

double Polygon::perimeter() const {
  double s = 0.0;
  for (size_t i = 0; i < v_.size(); ++i) s += (edge_end(i) - edge_start(i)).norm();
  return s;
}

Vec2 Polygon::centroid() const {
  double a = 0.0;
  Vec2 c;
  for (size_t i = 0; i < v_.size(); ++i) {
    const Vec2& p = v_[i];
    const Vec2& q = edge_end(i);
    const double w = p.cross(q);
    a += w;
    c += (p + q) * w;
  }
  return c / (3.0 * a);
}

bool Polygon::is_convex() const {
  const size_t n = v_.size();
  for (size_t i = 0; i < n; ++i) {
    if (orient(v_[i], v_[(i + 1) % n], v_[(i + 2) % n]) < -1e-12) return false;
  }
  return true;
}

bool Polygon::contains(const Vec2& p) const {
  const size_t n = v_.size();
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = v_[i];
    const Vec2& b = v_[j];
    if (point_segment_distance(p, a, b) <= 1e-12) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

Vec2 Polygon::boundary_point(double t) const {
  t -= std::floor(t);
  double target = t * perimeter();
  for (size_t i = 0; i < v_.size(); ++i) {
    const Vec2 e = edge_end(i) - edge_start(i);
    const double len = e.norm();
    if (target <= len || i + 1 == v_.size()) return edge_start(i) + e * (std::min(target, len) / len);
    target -= len;
  }
  return v_.front();
}

Vec2 Polygon::boundary_inward_normal(double t) const {
  t -= std::floor(t);
  double target = t * perimeter();
  for (size_t i = 0; i < v_.size(); ++i) {
    const Vec2 e = edge_end(i) - edge_start(i);
    const double len = e.norm();
    if (target < len || i + 1 == v_.size()) return e.perp() / len;
    target -= len;
  }
  return {};
}

Polygon translated(const Polygon& p, const Vec2& offset) {
  std::vector<Vec2> v = p.vertices();
  for (auto& q : v) q += offset;
  return Polygon::trusted(std::move(v));
}

Polygon posed_polygon(const Polygon& shape, const SE2State& pose) {
  const double c = std::cos(pose.psi), s = std::sin(pose.psi);
  std::vector<Vec2> v = shape.vertices();
  for (auto& q : v) q = Vec2{c * q.x - s * q.y + pose.x, s * q.x + c * q.y + pose.y};
  return Polygon::trusted(std::move(v));
}

namespace {

// True when some edge normal of `a` separates the two closed sets.
bool separated_by_edges_of(const Polygon& a, const Polygon& b) {
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 axis = (a.edge_end(i) - a.edge_start(i)).perp();
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const auto& p : a.vertices()) {
      const double d = axis.dot(p);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (const auto& p : b.vertices()) {
      const double d = axis.dot(p);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    if (amax < bmin || bmax < amin) return true;
  }
  return false;
}

}  // namespace

bool convex_intersect(const Polygon& a, const Polygon& b) {
  return !separated_by_edges_of(a, b) && !separated_by_edges_of(b, a);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

double point_polygon_distance(const Vec2& p, const Polygon& convex) {
  if (convex.contains(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < convex.size(); ++i) {
    best = std::min(best, point_segment_distance(p, convex.edge_start(i), convex.edge_end(i)));
  }
  return best;
}

double convex_distance(const Polygon& a, const Polygon& b) {
  if (convex_intersect(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      best = std::min(best, point_segment_distance(a[i], b.edge_start(j), b.edge_end(j)));
      best = std::min(best, point_segment_distance(b[j], a.edge_start(i), a.edge_end(i)));
    }
  }
  return best;
}

namespace {

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
}

std::vector<std::vector<size_t>> ear_clip(const std::vector<Vec2>& v) {
  std::vector<size_t> idx(v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::vector<size_t>> tris;
  size_t guard = 0;
  while (idx.size() > 3 && guard++ < 10 * v.size() * v.size()) {
    const size_t n = idx.size();
    bool clipped = false;
    for (size_t k = 0; k < n && !clipped; ++k) {
      const size_t ip = idx[(k + n - 1) % n], ic = idx[k], in = idx[(k + 1) % n];
      const double turn = orient(v[ip], v[ic], v[in]);
      if (turn <= 1e-14) continue;
      bool blocked = false;
      for (size_t q : idx) {
        if (q == ip || q == ic || q == in) continue;
        if (point_in_triangle(v[q], v[ip], v[ic], v[in])) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({ip, ic, in});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
    }
    if (!clipped) {
      // Only collinear vertices remain clipable; drop one.
      for (size_t k = 0; k < n; ++k) {
        if (std::abs(orient(v[idx[(k + n - 1) % n]], v[idx[k]], v[idx[(k + 1) % n]])) <= 1e-14) {
          idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
          clipped = true;
          break;
        }
      }
      if (!clipped) throw GeometryError("ear clipping failed");
    }
  }
  if (idx.size() == 3 && orient(v[idx[0]], v[idx[1]], v[idx[2]]) > 1e-14) tris.push_back(idx);
  return tris;
}

bool ring_convex(const std::vector<Vec2>& v, const std::vector<size_t>& ring) {
  const size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    if (orient(v[ring[i]], v[ring[(i + 1) % n]], v[ring[(i + 2) % n]]) < -1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<Polygon> convex_decompose(const Polygon& polygon) {
  if (polygon.is_convex()) return {polygon};
  const auto& v = polygon.vertices();
  auto pieces = ear_clip(v);

  // Hertel-Mehlhorn: drop diagonals whose removal keeps both sides convex.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t a = 0; a < pieces.size() && !merged; ++a) {
      for (size_t b = a + 1; b < pieces.size() && !merged; ++b) {
        const auto& P = pieces[a];
        const auto& Q = pieces[b];
        for (size_t i = 0; i < P.size() && !merged; ++i) {
          const size_t u = P[i], w = P[(i + 1) % P.size()];
          for (size_t j = 0; j < Q.size(); ++j) {
            if (Q[j] != w || Q[(j + 1) % Q.size()] != u) continue;
            std::vector<size_t> ring;
            for (size_t k = 0; k < P.size(); ++k) ring.push_back(P[(i + 1 + k) % P.size()]);
            // ring starts at w, ends at u; continue with Q after u back to w
            for (size_t k = 2; k < Q.size(); ++k) ring.push_back(Q[(j + k) % Q.size()]);
            if (ring_convex(v, ring)) {
              pieces[a] = ring;
              pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(b));
              merged = true;
            }
            break;
          }
        }
      }
    }
  }

  std::vector<Polygon> out;
  for (const auto& ring : pieces) {
    std::vector<Vec2> pts;
    for (size_t k : ring) pts.push_back(v[k]);
    out.push_back(Polygon::trusted(std::move(pts)));
  }
  return out;
}

Shape::Shape(Polygon outline_) : outline(std::move(outline_)), parts(convex_decompose(outline)) {
  for (const auto& p : outline.vertices()) bounding_radius = std::max(bounding_radius, p.norm());
}

Workspace::Workspace(Polygon bounds_, std::vector<Polygon> obstacles_, double inflation)
    : bounds(std::move(bounds_)), obstacles(std::move(obstacles_)), inflation_radius(inflation) {
  if (inflation_radius < 0) throw GeometryError("inflation radius must be nonnegative");
  rebuild();
}

void Workspace::rebuild() {
  parts_.clear();
  for (const auto& o : obstacles) {
    for (auto& part : convex_decompose(o)) {
      Vec2 c;
      for (const auto& p : part.vertices()) c += p;
      c = c / static_cast<double>(part.size());
      double r = 0.0;
      for (const auto& p : part.vertices()) r = std::max(r, (p - c).norm());
      parts_.push_back({std::move(part), c, r});
    }
  }
}

namespace {

bool leaves_bounds(const Polygon& posed, const Workspace& ws, double margin) {
  for (const auto& p : posed.vertices()) {
    if (!ws.bounds.contains(p)) return true;
  }
  for (size_t i = 0; i < posed.size(); ++i) {
    for (size_t j = 0; j < ws.bounds.size(); ++j) {
      const double d = segment_segment_distance(posed.edge_start(i), posed.edge_end(i),
                                                ws.bounds.edge_start(j), ws.bounds.edge_end(j));
      if (d <= margin) return true;
    }
  }
  return false;
}

}  // namespace

bool collides(const Shape& shape, const SE2State& pose, const Workspace& ws) {
  const double infl = ws.inflation_radius;
  const Vec2 center = pose.position();
  std::vector<Polygon> posed;
  for (const auto& part : ws.parts()) {
    if ((part.center - center).norm() - part.radius - shape.bounding_radius > infl) continue;
    if (posed.empty()) {
      for (const auto& sp : shape.parts) posed.push_back(posed_polygon(sp, pose));
    }
    for (const auto& sp : posed) {
      if (convex_distance(sp, part.poly) <= infl) return true;
    }
  }
  return leaves_bounds(posed_polygon(shape.outline, pose), ws, infl);
}

bool collides(const Polygon& shape, const SE2State& pose, const Workspace& ws) {
  return collides(Shape(shape), pose, ws);
}

double clearance(const Shape& shape, const SE2State& pose, const Workspace& ws) {
  const Polygon outline = posed_polygon(shape.outline, pose);
  for (const auto& p : outline.vertices()) {
    if (!ws.bounds.contains(p)) return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < outline.size(); ++i) {
    for (size_t j = 0; j < ws.bounds.size(); ++j) {
      best = std::min(best, segment_segment_distance(outline.edge_start(i), outline.edge_end(i),
                                                     ws.bounds.edge_start(j), ws.bounds.edge_end(j)));
    }
  }
  std::vector<Polygon> posed;
  for (const auto& sp : shape.parts) posed.push_back(posed_polygon(sp, pose));
  const Vec2 center = pose.position();
  for (const auto& part : ws.parts()) {
    if ((part.center - center).norm() - part.radius - shape.bounding_radius > best) continue;
    for (const auto& sp : posed) best = std::min(best, convex_distance(sp, part.poly));
  }
  return best;
}

bool disc_collides(const Vec2& center, double radius, const Workspace& ws) {
  if (!ws.bounds.contains(center)) return true;
  for (size_t j = 0; j < ws.bounds.size(); ++j) {
    if (point_segment_distance(center, ws.bounds.edge_start(j), ws.bounds.edge_end(j)) <= radius) return true;
  }
  for (const auto& part : ws.parts()) {
    if ((part.center - center).norm() - part.radius > radius) continue;
    if (point_polygon_distance(center, part.poly) <= radius) return true;
  }
  return false;
}

double hausdorff(std::span<const SE2State> a, std::span<const SE2State> b, double angle_weight) {
  if (a.empty() || b.empty()) throw GeometryError("hausdorff of an empty sequence");
  auto directed = [&](std::span<const SE2State> p, std::span<const SE2State> q) {
    double worst = 0.0;
    for (const auto& s : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : q) {
        best = std::min(best, se2_distance(s, t, angle_weight));
        if (best <= worst) break;
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace pushcraft
