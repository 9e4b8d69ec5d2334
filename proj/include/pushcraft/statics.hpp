#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "pushcraft/geometry.hpp"

namespace pushcraft {

inline constexpr double kGravity = 9.81;
/// Absolute threshold (N) below which a feasibility residual counts as zero.
inline constexpr double kTolLp = 1e-6;

struct BodyVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  BodyVelocity operator+(const BodyVelocity& o) const { return {vx + o.vx, vy + o.vy, omega + o.omega}; }
  BodyVelocity operator-(const BodyVelocity& o) const { return {vx - o.vx, vy - o.vy, omega - o.omega}; }
  BodyVelocity operator-() const { return {-vx, -vy, -omega}; }
  BodyVelocity operator*(double s) const { return {vx * s, vy * s, omega * s}; }
  bool operator==(const BodyVelocity&) const = default;

  bool is_zero() const { return vx == 0.0 && vy == 0.0 && omega == 0.0; }
  Eigen::Vector3d vec() const { return {vx, vy, omega}; }
  static BodyVelocity from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  /// sqrt(vx^2 + vy^2 + (c*omega)^2)
  double weighted_norm(double c) const { return std::sqrt(vx * vx + vy * vy + c * c * omega * omega); }
};

struct GeneralizedForce {
  double fx = 0.0;
  double fy = 0.0;
  double torque = 0.0;

  Eigen::Vector3d vec() const { return {fx, fy, torque}; }
  static GeneralizedForce from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

struct ContactPoint {
  Vec2 position;      // body frame
  Vec2 normal;        // inward unit normal
  Vec2 tangent;       // normal rotated by +pi/2
  double f_push_max = 0.0;
  double boundary_t = 0.0;  // arclength fraction along the outline

  static ContactPoint on_boundary(const Polygon& outline, double t, double f_push_max);
};

struct InteractionMode {
  std::vector<ContactPoint> contacts;

  size_t size() const { return contacts.size(); }
  bool operator==(const InteractionMode& o) const;
};

struct ObjectIntrinsics {
  Shape shape;  // body frame, centre of mass at the origin
  double mass = 0.0;
  double inertia = 0.0;
  double mu_ground = 0.0;
  double mu_contact = 0.0;
  double f_max = 0.0;
  double m_max = 0.0;

  double c() const { return m_max / f_max; }
};

/// Recentres the outline on its centroid and derives the friction limits
/// from a uniform pressure distribution unless they are given (> 0).
ObjectIntrinsics make_intrinsics(const Polygon& outline, double mass, double mu_ground, double mu_contact,
                                 double f_max = 0.0, double m_max = 0.0);

/// Integral of |r| over the polygon area (r measured from the origin).
double polar_moment_abs(const Polygon& polygon);

GeneralizedForce friction_force(const BodyVelocity& p, const ObjectIntrinsics& intr);

/// 3 x 2N; columns alternate normal and tangential force of each contact.
Eigen::Matrix3Xd contact_jacobian(const InteractionMode& mode);

struct FeasibilityResult {
  double value = 0.0;               // min |J F + eta|_1
  std::vector<double> normal;       // per contact
  std::vector<double> tangential;   // per contact
  GeneralizedForce wrench;          // J F
};

FeasibilityResult solve_feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr);
double feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr);

using DirectionWeights = std::array<double, 6>;
inline constexpr DirectionWeights kDefaultWeights{5, 1, 1, 1, 1, 1};

/// Main direction followed by the five auxiliary directions, each scaled to
/// |D2 p| = 1.
std::array<BodyVelocity, 6> spanning_directions(const BodyVelocity& p, const ObjectIntrinsics& intr);

double multi_feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr,
                         const DirectionWeights& weights = kDefaultWeights);

bool velocity_allowed(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr);

}  // namespace pushcraft
