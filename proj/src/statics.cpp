#include "pushcraft/statics.hpp"

#include <stdexcept>

#include "pushcraft/lp.hpp"

namespace pushcraft {

ContactPoint ContactPoint::on_boundary(const Polygon& outline, double t, double f_push_max) {
  ContactPoint c;
  c.boundary_t = t - std::floor(t);
  c.position = outline.boundary_point(c.boundary_t);
  c.normal = outline.boundary_inward_normal(c.boundary_t);
  c.tangent = c.normal.perp();
  c.f_push_max = f_push_max;
  return c;
}

bool InteractionMode::operator==(const InteractionMode& o) const {
  if (contacts.size() != o.contacts.size()) return false;
  for (size_t i = 0; i < contacts.size(); ++i) {
    if ((contacts[i].position - o.contacts[i].position).norm() > 1e-12) return false;
    if ((contacts[i].normal - o.contacts[i].normal).norm() > 1e-12) return false;
  }
  return true;
}

namespace {

// Integral of |r| over a triangle by repeated midpoint subdivision and the
// edge-midpoint rule on each leaf.
double triangle_abs_moment(const Vec2& a, const Vec2& b, const Vec2& c, int depth) {
  if (depth == 0) {
    const double area = 0.5 * std::abs((b - a).cross(c - a));
    const Vec2 m1 = (a + b) * 0.5, m2 = (b + c) * 0.5, m3 = (c + a) * 0.5;
    return area * (m1.norm() + m2.norm() + m3.norm()) / 3.0;
  }
  const Vec2 ab = (a + b) * 0.5, bc = (b + c) * 0.5, ca = (c + a) * 0.5;
  return triangle_abs_moment(a, ab, ca, depth - 1) + triangle_abs_moment(ab, b, bc, depth - 1) +
         triangle_abs_moment(ca, bc, c, depth - 1) + triangle_abs_moment(ab, bc, ca, depth - 1);
}

}  // namespace

double polar_moment_abs(const Polygon& polygon) {
  double total = 0.0;
  for (const auto& part : convex_decompose(polygon)) {
    const Vec2 o = part.centroid();
    for (size_t i = 0; i < part.size(); ++i) {
      total += triangle_abs_moment(o, part.edge_start(i), part.edge_end(i), 6);
    }
  }
  return total;
}

ObjectIntrinsics make_intrinsics(const Polygon& outline, double mass, double mu_ground, double mu_contact,
                                 double f_max, double m_max) {
  if (!(mass > 0)) throw std::invalid_argument("mass must be positive");
  if (mu_ground < 0 || mu_contact < 0) throw std::invalid_argument("friction coefficients must be nonnegative");
  const Polygon centred = translated(outline, -outline.centroid());
  ObjectIntrinsics intr;
  intr.shape = Shape(centred);
  intr.mass = mass;
  intr.mu_ground = mu_ground;
  intr.mu_contact = mu_contact;
  const double area = centred.signed_area();

  double second = 0.0;  // integral of |r|^2 over the area
  for (size_t i = 0; i < centred.size(); ++i) {
    const Vec2 p = centred.edge_start(i), q = centred.edge_end(i);
    const double w = p.cross(q);
    second += w * (p.squared_norm() + p.dot(q) + q.squared_norm()) / 12.0;
  }
  intr.inertia = mass / area * second;

  intr.f_max = f_max > 0 ? f_max : mu_ground * mass * kGravity;
  intr.m_max = m_max > 0 ? m_max : mu_ground * (mass / area) * kGravity * polar_moment_abs(centred);
  if (!(intr.f_max > 0) || !(intr.m_max > 0)) throw std::invalid_argument("friction limits must be positive");
  return intr;
}

GeneralizedForce friction_force(const BodyVelocity& p, const ObjectIntrinsics& intr) {
  if (p.is_zero()) throw std::invalid_argument("undefined friction direction");
  const double c = intr.c();
  const double d2w = c * c * p.omega;
  const double nx = p.vx / intr.f_max, ny = p.vy / intr.f_max, nw = d2w / intr.m_max;
  const double scale = std::sqrt(nx * nx + ny * ny + nw * nw);
  return {-p.vx / scale, -p.vy / scale, -d2w / scale};
}

Eigen::Matrix3Xd contact_jacobian(const InteractionMode& mode) {
  Eigen::Matrix3Xd J(3, 2 * mode.size());
  for (size_t k = 0; k < mode.size(); ++k) {
    const auto& cp = mode.contacts[k];
    const Vec2& r = cp.position;
    J.col(2 * k) << cp.normal.x, cp.normal.y, r.cross(cp.normal);
    J.col(2 * k + 1) << cp.tangent.x, cp.tangent.y, r.cross(cp.tangent);
  }
  return J;
}

FeasibilityResult solve_feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr) {
  const GeneralizedForce eta = friction_force(p, intr);
  const Eigen::Matrix3Xd J = contact_jacobian(mode);
  const size_t n = mode.size();
  const double mu = intr.mu_contact;

  lp::Problem prob;
  std::vector<int> fn(n), tp(n), tm(n);
  for (size_t k = 0; k < n; ++k) {
    fn[k] = prob.add_variable(0, mode.contacts[k].f_push_max, 0);
    tp[k] = prob.add_variable(0, lp::kInf, 0);
    tm[k] = prob.add_variable(0, lp::kInf, 0);
    prob.add_constraint({{tp[k], 1}, {tm[k], 1}, {fn[k], -mu}}, lp::Sense::LessEqual, 0);
  }
  const double target[3] = {-eta.fx, -eta.fy, -eta.torque};
  for (int row = 0; row < 3; ++row) {
    std::vector<lp::Term> terms;
    for (size_t k = 0; k < n; ++k) {
      terms.push_back({fn[k], J(row, 2 * k)});
      terms.push_back({tp[k], J(row, 2 * k + 1)});
      terms.push_back({tm[k], -J(row, 2 * k + 1)});
    }
    const int rp = prob.add_variable(0, lp::kInf, 1);
    const int rm = prob.add_variable(0, lp::kInf, 1);
    terms.push_back({rp, -1});
    terms.push_back({rm, 1});
    prob.add_constraint(std::move(terms), lp::Sense::Equal, target[row]);
  }

  const lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::Optimal) throw lp::LpError(sol.status, "feasibility LP failed");

  FeasibilityResult res;
  res.normal.resize(n);
  res.tangential.resize(n);
  Eigen::VectorXd F(2 * n);
  for (size_t k = 0; k < n; ++k) {
    res.normal[k] = sol.x[fn[k]];
    res.tangential[k] = sol.x[tp[k]] - sol.x[tm[k]];
    F(2 * k) = res.normal[k];
    F(2 * k + 1) = res.tangential[k];
  }
  res.wrench = GeneralizedForce::from(J * F);
  res.value = std::abs(res.wrench.fx + eta.fx) + std::abs(res.wrench.fy + eta.fy) +
              std::abs(res.wrench.torque + eta.torque);
  return res;
}

double feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr) {
  return solve_feasibility(mode, p, intr).value;
}

std::array<BodyVelocity, 6> spanning_directions(const BodyVelocity& p, const ObjectIntrinsics& intr) {
  if (p.is_zero()) throw std::invalid_argument("undefined friction direction");
  const double c2 = intr.c() * intr.c();
  auto unit = [c2](const Eigen::Vector3d& v) {
    const double n = std::sqrt(v.x() * v.x() + v.y() * v.y() + c2 * c2 * v.z() * v.z());
    return Eigen::Vector3d(v / n);
  };
  const Eigen::Vector3d p1 = unit(p.vec());
  Eigen::Vector3d p2 = Eigen::Vector3d::UnitZ().cross(p1);
  if (p2.norm() <= 1e-12 * p1.norm()) p2 = Eigen::Vector3d::UnitX();
  p2 = unit(p2);
  const Eigen::Vector3d p3 = unit(p1.cross(p2));
  return {BodyVelocity::from(p1), BodyVelocity::from(p2),  BodyVelocity::from(p3),
          BodyVelocity::from(-p1), BodyVelocity::from(-p2), BodyVelocity::from(-p3)};
}

double multi_feasibility(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr,
                         const DirectionWeights& weights) {
  const auto dirs = spanning_directions(p, intr);
  double total = 0.0;
  for (size_t d = 0; d < dirs.size(); ++d) {
    if (weights[d] == 0.0) continue;
    total += weights[d] * feasibility(mode, dirs[d], intr);
  }
  return total;
}

bool velocity_allowed(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr) {
  return feasibility(mode, p, intr) <= kTolLp;
}

}  // namespace pushcraft
