#include "pushcraft/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace pushcraft {

double RefinedTrajectory::total_residual() const {
  double s = 0.0;
  for (double r : residuals) s += r;
  return s;
}

SE2State RefinedTrajectory::state_at(double t) const {
  if (velocities.empty() || t <= 0.0) return states.front();
  if (t >= duration()) return states.back();
  const size_t k = std::min(velocities.size() - 1, static_cast<size_t>(t / dt));
  return roll_arc(states[k], velocities[k], t - k * dt);
}

BodyVelocity RefinedTrajectory::velocity_at(double t) const {
  if (velocities.empty()) return {};
  const size_t k = std::min(velocities.size() - 1, static_cast<size_t>(std::max(t, 0.0) / dt));
  return velocities[k];
}

namespace {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

std::vector<SE2State> rollout(const SE2State& s0, const std::vector<BodyVelocity>& p, double dt) {
  std::vector<SE2State> out{s0};
  out.reserve(p.size() + 1);
  for (const auto& v : p) out.push_back(v.is_zero() ? out.back() : roll_arc(out.back(), v, dt));
  return out;
}

Vector3d state_error(const SE2State& s, const SE2State& g) { return {s.x - g.x, s.y - g.y, wrap_angle(s.psi - g.psi)}; }

double step_residual(const InteractionMode& mode, const BodyVelocity& p, const ObjectIntrinsics& intr) {
  if (p.weighted_norm(intr.c()) < 1e-12) return 0.0;
  return feasibility(mode, p, intr);
}

double penalty(const SE2State& s, const Shape& shape, const Workspace& ws, const TrackerConfig& cfg) {
  const double h = ws.inflation_radius + cfg.clearance_margin - clearance(shape, s, ws);
  return h > 0.0 ? cfg.clearance_weight * h * h : 0.0;
}

std::vector<BodyVelocity> unpack(const VectorXd& x) {
  std::vector<BodyVelocity> p(x.size() / 3);
  for (size_t t = 0; t < p.size(); ++t) p[t] = {x(3 * t), x(3 * t + 1), x(3 * t + 2)};
  return p;
}

VectorXd pack(const std::vector<BodyVelocity>& p) {
  VectorXd x(3 * p.size());
  for (size_t t = 0; t < p.size(); ++t) x.segment<3>(3 * t) << p[t].vx, p[t].vy, p[t].omega;
  return x;
}

// d(states[k]) / d(x) for k = 1..T, stacked as 3T x 3T, by central differences
MatrixXd state_jacobian(const SE2State& s0, const VectorXd& x, double dt) {
  const Eigen::Index n = x.size();
  MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6;
    VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const auto a = rollout(s0, unpack(xp), dt), b = rollout(s0, unpack(xm), dt);
    for (Eigen::Index k = 0; k < n / 3; ++k) {
      const Vector3d d = state_error(a[k + 1], b[k + 1]) / (2 * h);
      S.block<3, 1>(3 * k, j) = d;
    }
  }
  return S;
}

Vector3d wrench_target(const BodyVelocity& p, const ObjectIntrinsics& intr) {
  const GeneralizedForce f = friction_force(p, intr);
  return {-f.fx, -f.fy, -f.torque};
}

}  // namespace

double tracking_objective(const SE2State& current, const std::vector<BodyVelocity>& p, const InteractionMode& mode,
                          const ObjectIntrinsics& intr, const Workspace& ws, const TrackerConfig& cfg,
                          const BodyVelocity* previous) {
  double obj = 0.0;
  for (const auto& v : p) obj += step_residual(mode, v, intr);
  for (size_t t = 0; t < p.size(); ++t) {
    const BodyVelocity* before = t > 0 ? &p[t - 1] : previous;
    if (!before) continue;
    const BodyVelocity d = p[t] - *before;
    obj += cfg.w_I * (d.vx * d.vx + d.vy * d.vy + d.omega * d.omega);
  }
  const auto states = rollout(current, p, cfg.dt);
  for (size_t k = 1; k < states.size(); ++k) obj += penalty(states[k], intr.shape, ws, cfg);
  return obj;
}

RefinedTrajectory refine_trajectory(const SE2State& current, const SE2State& goal, const InteractionMode& mode,
                                    const ObjectIntrinsics& intr, const Workspace& ws, const TrackerConfig& cfg,
                                    const BodyVelocity* previous) {
  const int T = cfg.horizon;
  const double c = intr.c();
  RefinedTrajectory out;
  out.dt = cfg.dt;

  std::vector<BodyVelocity> p(T);
  if (se2_distance(current, goal, c) > 1e-12) {
    const ArcTransition arc = connect_arc(current, goal, c);
    const BodyVelocity v = arc.velocity * (arc.duration / (T * cfg.dt));
    std::fill(p.begin(), p.end(), v);
  }
  double obj = tracking_objective(current, p, mode, intr, ws, cfg, previous);
  out.objective_history.push_back(obj);

  const bool moving = se2_distance(current, goal, c) > 1e-12;
  VectorXd x = pack(p);
  const Eigen::Index n = x.size();

  // pins the endpoint with weighted minimum-norm corrections; `late` puts
  // the correction on the end of the horizon so the first steps keep their shape
  auto project = [&](VectorXd& y, bool late) {
    VectorXd w = VectorXd::Ones(n);
    if (late) {
      for (int t = 0; t < T; ++t) w.segment<3>(3 * t).setConstant(std::pow((t + 1.0) / T, 2));
    }
    for (int it = 0; it < 20; ++it) {
      const auto st = rollout(current, unpack(y), cfg.dt);
      const Vector3d e = state_error(st.back(), goal);
      if (e.norm() < 1e-12) return true;
      const MatrixXd A = state_jacobian(current, y, cfg.dt).bottomRows(3);
      const MatrixXd AW = A * w.asDiagonal();
      y -= AW.transpose() * (AW * A.transpose()).ldlt().solve(e);
    }
    const auto st = rollout(current, unpack(y), cfg.dt);
    return state_error(st.back(), goal).norm() < 1e-9;
  };

  for (int sweep = 0; moving && sweep < cfg.max_sweeps && obj > 0.0; ++sweep) {
    const auto states = rollout(current, p, cfg.dt);
    const MatrixXd S = state_jacobian(current, x, cfg.dt);
    MatrixXd H = MatrixXd::Identity(n, n) * 1.0;  // proximal term
    VectorXd g = VectorXd::Zero(n);
    VectorXd consistent = x;  // velocities whose friction matches the achievable wrench

    // feasibility: freeze the achievable wrench, pull the friction wrench toward it
    for (int t = 0; t < T; ++t) {
      if (p[t].weighted_norm(c) < 1e-12) continue;
      const FeasibilityResult fr = solve_feasibility(mode, p[t], intr);
      if (fr.value <= kTolLp) continue;
      const Vector3d w = fr.wrench.vec();
      const Eigen::Vector3d dir(w.x(), w.y(), w.z() / (c * c));
      if (dir.norm() > 1e-12) {
        const BodyVelocity ph = BodyVelocity::from(dir);
        consistent.segment<3>(3 * t) = dir * (p[t].weighted_norm(c) / ph.weighted_norm(c));
      }
      const Vector3d e = wrench_target(p[t], intr) - w;
      const double en = e.norm();
      Eigen::Matrix3d J;
      for (int k = 0; k < 3; ++k) {
        Vector3d dp = Vector3d::Zero();
        dp(k) = 1e-6 * std::max(1.0, p[t].vec().norm());
        J.col(k) = (wrench_target(BodyVelocity::from(p[t].vec() + dp), intr) -
                    wrench_target(BodyVelocity::from(p[t].vec() - dp), intr)) /
                   (2 * dp(k));
      }
      H.block<3, 3>(3 * t, 3 * t) += J.transpose() * J / en;
      g.segment<3>(3 * t) += J.transpose() * e / en;
    }
    // smoothness
    for (int t = 0; t < T; ++t) {
      if (t == 0 && !previous) continue;
      const Vector3d before = t > 0 ? p[t - 1].vec() : previous->vec();
      const Vector3d d = p[t].vec() - before;
      H.block<3, 3>(3 * t, 3 * t) += 2 * cfg.w_I * Eigen::Matrix3d::Identity();
      g.segment<3>(3 * t) += 2 * cfg.w_I * d;
      if (t > 0) {
        H.block<3, 3>(3 * (t - 1), 3 * (t - 1)) += 2 * cfg.w_I * Eigen::Matrix3d::Identity();
        H.block<3, 3>(3 * t, 3 * (t - 1)) -= 2 * cfg.w_I * Eigen::Matrix3d::Identity();
        H.block<3, 3>(3 * (t - 1), 3 * t) -= 2 * cfg.w_I * Eigen::Matrix3d::Identity();
        g.segment<3>(3 * (t - 1)) -= 2 * cfg.w_I * d;
      }
    }
    // clearance penalty, Gauss-Newton
    for (int k = 1; k <= T; ++k) {
      const double d_safe = ws.inflation_radius + cfg.clearance_margin;
      const double h = d_safe - clearance(intr.shape, states[k], ws);
      if (h <= 0.0) continue;
      Vector3d grad;
      for (int q = 0; q < 3; ++q) {
        const double step = 1e-5;
        SE2State a = states[k], b = states[k];
        if (q == 0) a.x += step, b.x -= step;
        if (q == 1) a.y += step, b.y -= step;
        if (q == 2) a.psi += step, b.psi -= step;
        grad(q) = -(clearance(intr.shape, a, ws) - clearance(intr.shape, b, ws)) / (2 * step);
      }
      const Eigen::RowVectorXd Jh = grad.transpose() * S.middleRows(3 * (k - 1), 3);
      H += 2 * cfg.clearance_weight * Jh.transpose() * Jh;
      g += 2 * cfg.clearance_weight * h * Jh.transpose();
    }

    // equality-constrained step on the linearised endpoint
    const MatrixXd A = S.bottomRows(3);
    const Vector3d e_end = state_error(states.back(), goal);
    MatrixXd K = MatrixXd::Zero(n + 3, n + 3);
    K.topLeftCorner(n, n) = H;
    K.topRightCorner(n, 3) = A.transpose();
    K.bottomLeftCorner(3, n) = A;
    VectorXd rhs(n + 3);
    rhs << -g, -e_end;
    const VectorXd delta = K.fullPivLu().solve(rhs).head(n);

    // candidate steps: damped move toward the force-consistent velocities,
    // then the linearised KKT step; the first one that lowers the objective wins
    double gain = -1.0;
    for (int kind = 0; kind < 2 && gain < 0.0; ++kind) {
      const VectorXd dir = kind == 0 ? VectorXd(consistent - x) : delta;
      if (dir.norm() < 1e-14) continue;
      for (double alpha = kind == 0 ? cfg.damping : 1.0; alpha >= 1.0 / 64; alpha *= cfg.damping) {
        VectorXd y = x + alpha * dir;
        if (!project(y, kind == 0)) continue;
        const auto py = unpack(y);
        const double oy = tracking_objective(current, py, mode, intr, ws, cfg, previous);
        if (oy < obj) {
          gain = obj - oy;
          x = y;
          p = py;
          obj = oy;
          out.objective_history.push_back(obj);
          break;
        }
      }
    }
    if (gain < cfg.tol) break;
  }

  out.velocities = p;
  out.states = rollout(current, p, cfg.dt);
  for (const auto& v : p) out.residuals.push_back(step_residual(mode, v, intr));
  const bool reached = state_error(out.states.back(), goal).norm() < 1e-6;
  bool fast = false;
  for (const auto& v : p) fast = fast || v.weighted_norm(c) > cfg.max_speed;
  out.status = reached && !fast ? TrackStatus::Converged : TrackStatus::NotConverged;
  return out;
}

SE2State robot_slot(const ContactPoint& cp, const SE2State& object, double robot_radius) {
  const Vec2 center = object.transform(cp.position - cp.normal * robot_radius);
  const Vec2 n = rotate(cp.normal, object.psi);
  return {center.x, center.y, std::atan2(n.y, n.x)};
}

std::vector<RobotCommand> robot_commands(const RefinedTrajectory& refined, double t, const InteractionMode& mode,
                                         const std::vector<SE2State>& robots, double robot_radius,
                                         const TrackerConfig& cfg) {
  const SE2State ref = refined.state_at(t);
  const BodyVelocity p = refined.velocity_at(t);
  const Vec2 v_obj = rotate({p.vx, p.vy}, ref.psi);
  std::vector<RobotCommand> out(robots.size());
  for (size_t i = 0; i < robots.size() && i < mode.size(); ++i) {
    const SE2State slot = robot_slot(mode.contacts[i], ref, robot_radius);
    const Vec2 r = slot.position() - ref.position();
    const Vec2 ff = v_obj + r.perp() * p.omega;
    Vec2 v = ff + (slot.position() - robots[i].position()) * cfg.K_v;
    const double sp = v.norm();
    if (sp > cfg.robot_max_speed) v = v * (cfg.robot_max_speed / sp);
    const double w = cfg.K_psi * wrap_angle(slot.psi - robots[i].psi) + p.omega;
    out[i] = {v, std::clamp(w, -cfg.robot_max_omega, cfg.robot_max_omega)};
  }
  return out;
}

size_t local_goal_index(const std::vector<SE2State>& reference, size_t from, const SE2State& current, double reach,
                        double c) {
  size_t best = from;
  for (size_t i = from; i < reference.size(); ++i) {
    if (se2_distance(reference[i], current, c) <= reach) best = i;
  }
  return best;
}

}  // namespace pushcraft
