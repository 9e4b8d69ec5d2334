#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushcraft {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  bool operator==(const Vec2&) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  Vec2 perp() const { return {-y, x}; }  // rotated by +pi/2
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar pose with the heading kept in [-pi, pi).
struct SE2State {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  SE2State() = default;
  SE2State(double x_, double y_, double psi_) : x(x_), y(y_), psi(wrap_angle(psi_)) {}

  Vec2 position() const { return {x, y}; }
  /// Body-frame point expressed in the world frame.
  Vec2 transform(const Vec2& body) const { return rotate(body, psi) + position(); }
  /// World-frame point expressed in the body frame.
  Vec2 inverse_transform(const Vec2& world) const { return rotate(world - position(), -psi); }
  bool operator==(const SE2State&) const = default;
};

/// sqrt(dx^2 + dy^2 + (angle_weight * wrap(dpsi))^2)
double se2_distance(const SE2State& a, const SE2State& b, double angle_weight);

/// Simple polygon with counterclockwise vertices.
class Polygon {
 public:
  Polygon() = default;
  /// Validates the ring: at least 3 vertices, simple, nonzero area.
  /// Clockwise input is reversed so the stored ring is counterclockwise.
  explicit Polygon(std::vector<Vec2> vertices);

  /// Wraps vertices that are already known to be a valid CCW ring.
  static Polygon trusted(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return v_; }
  size_t size() const { return v_.size(); }
  const Vec2& operator[](size_t i) const { return v_[i]; }
  Vec2 edge_start(size_t i) const { return v_[i]; }
  Vec2 edge_end(size_t i) const { return v_[(i + 1) % v_.size()]; }

  double signed_area() const;
  double perimeter() const;
  Vec2 centroid() const;
  bool is_convex() const;
  bool contains(const Vec2& p) const;  // closed set

  /// Point at arclength fraction t in [0,1) along the boundary, starting at vertex 0.
  Vec2 boundary_point(double t) const;
  /// Inward unit normal of the edge that owns arclength fraction t.
  Vec2 boundary_inward_normal(double t) const;

 private:
  std::vector<Vec2> v_;
};

Polygon translated(const Polygon& p, const Vec2& offset);
Polygon posed_polygon(const Polygon& shape, const SE2State& pose);

/// True iff the two closed convex polygons share at least one point.
bool convex_intersect(const Polygon& a, const Polygon& b);
/// Euclidean distance between two convex polygons (0 when intersecting).
double convex_distance(const Polygon& a, const Polygon& b);
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
double point_polygon_distance(const Vec2& p, const Polygon& convex);

/// Ear clipping followed by Hertel-Mehlhorn merging of triangles.
std::vector<Polygon> convex_decompose(const Polygon& polygon);

/// A polygon together with its convex parts.
struct Shape {
  Polygon outline;
  std::vector<Polygon> parts;
  double bounding_radius = 0.0;  // about the body origin

  Shape() = default;
  explicit Shape(Polygon outline_);
};

struct Workspace {
  Polygon bounds;
  std::vector<Polygon> obstacles;
  double inflation_radius = 0.0;

  Workspace() = default;
  Workspace(Polygon bounds_, std::vector<Polygon> obstacles_, double inflation);

  /// Convex pieces of every obstacle with their bounding circles.
  struct Part {
    Polygon poly;
    Vec2 center;
    double radius;
  };
  const std::vector<Part>& parts() const { return parts_; }
  void rebuild();

 private:
  std::vector<Part> parts_;
};

/// True iff the posed shape touches an inflated obstacle or leaves the
/// inflated-inward bounds. Touching counts as collision.
bool collides(const Shape& shape, const SE2State& pose, const Workspace& ws);
bool collides(const Polygon& shape, const SE2State& pose, const Workspace& ws);

/// Distance from the posed shape to the nearest obstacle or bounds edge
/// (inflation not subtracted); 0 when overlapping.
double clearance(const Shape& shape, const SE2State& pose, const Workspace& ws);

/// True iff a disc touches any (non-inflated) obstacle or leaves the bounds.
bool disc_collides(const Vec2& center, double radius, const Workspace& ws);

/// Symmetric Hausdorff distance between two sampled state sequences under
/// the weighted SE(2) norm.
double hausdorff(std::span<const SE2State> a, std::span<const SE2State> b, double angle_weight);

}  // namespace pushcraft
