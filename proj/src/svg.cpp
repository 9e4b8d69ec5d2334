#include "pushcraft/svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pushcraft {

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                               "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string points(const std::vector<Vec2>& pts) {
  std::string s;
  for (const auto& p : pts) {
    if (!s.empty()) s += ' ';
    s += fmt(p.x) + "," + fmt(p.y);
  }
  return s;
}

std::vector<Vec2> ring(const Polygon& poly) { return poly.vertices(); }

}  // namespace

std::string render_svg(const Scenario& sc, const GuidingPath* path, const std::vector<HybridPlan>& plans,
                       const ExecutionLog* log) {
  const ObjectIntrinsics intr = make_intrinsics(sc.object, sc.mass, sc.mu_ground, sc.mu_contact);
  const double c = intr.c();
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& v : sc.workspace.bounds.vertices()) {
    x0 = std::min(x0, v.x), y0 = std::min(y0, v.y), x1 = std::max(x1, v.x), y1 = std::max(y1, v.y);
  }
  const double pad = 0.1 * std::max(x1 - x0, y1 - y0);
  const double legend_w = 1.5;
  const double W = x1 - x0 + 2 * pad + legend_w, H = y1 - y0 + 2 * pad;

  std::vector<InteractionMode> modes;
  auto mode_id = [&](const InteractionMode& m) {
    for (size_t i = 0; i < modes.size(); ++i) {
      if (modes[i] == m) return i;
    }
    modes.push_back(m);
    return modes.size() - 1;
  };
  auto colour = [](size_t id) { return kPalette[id % kPalette.size()]; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt(W) << ' ' << fmt(H) << "\" width=\""
     << static_cast<int>(W * 100) << "\" height=\"" << static_cast<int>(H * 100) << "\">\n";
  // world y up
  os << "<g transform=\"translate(" << fmt(pad - x0) << ' ' << fmt(H - pad + y0) << ") scale(1 -1)\">\n";
  os << "<polygon class=\"bounds\" points=\"" << points(ring(sc.workspace.bounds))
     << "\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"0.02\"/>\n";
  for (const auto& o : sc.workspace.obstacles) {
    os << "<polygon class=\"obstacle\" points=\"" << points(ring(o)) << "\" fill=\"#888888\"/>\n";
  }
  if (path && !path->states.empty()) {
    std::vector<Vec2> pts;
    for (const auto& s : path->states) pts.push_back(s.position());
    os << "<polyline class=\"guiding-path\" points=\"" << points(pts)
       << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"0.015\" stroke-dasharray=\"0.05 0.05\"/>\n";
  }
  for (size_t p = 0; p < plans.size(); ++p) {
    const auto& plan = plans[p];
    for (size_t k = 0; k < plan.segments(); ++k) {
      if (!plan.keyframes[k].mode) continue;
      const size_t id = mode_id(*plan.keyframes[k].mode);
      std::vector<Vec2> pts;
      for (const auto& s : sample_arc(plan.arc(k, c), c, 0.05)) pts.push_back(s.position());
      os << "<polyline class=\"segment\" data-plan=\"" << p << "\" data-mode=\"" << id << "\" points=\""
         << points(pts) << "\" fill=\"none\" stroke=\"" << colour(id) << "\" stroke-width=\"0.03\"/>\n";
    }
    for (size_t k = 0; k < plan.keyframes.size(); ++k) {
      const auto& kf = plan.keyframes[k];
      const char* col = kf.mode ? colour(mode_id(*kf.mode)) : "#000000";
      os << "<polygon class=\"keyframe\" data-plan=\"" << p << "\" points=\""
         << points(ring(posed_polygon(intr.shape.outline, kf.state))) << "\" fill=\"none\" stroke=\"" << col
         << "\" stroke-width=\"0.01\"/>\n";
    }
  }
  if (log && !log->records.empty()) {
    const size_t stride = std::max<size_t>(1, log->records.size() / 2000);
    std::vector<Vec2> obj;
    std::vector<std::vector<Vec2>> robots(log->records.front().robots.size());
    for (size_t i = 0; i < log->records.size(); i += stride) {
      const auto& r = log->records[i];
      obj.push_back(r.object.position());
      for (size_t j = 0; j < robots.size() && j < r.robots.size(); ++j) robots[j].push_back(r.robots[j].position());
    }
    for (size_t j = 0; j < robots.size(); ++j) {
      os << "<polyline class=\"robot-trace\" data-robot=\"" << j << "\" points=\"" << points(robots[j])
         << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.01\"/>\n";
    }
    os << "<polyline class=\"object-trace\" points=\"" << points(obj)
       << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.02\"/>\n";
    os << "<polygon class=\"final-pose\" points=\""
       << points(ring(posed_polygon(intr.shape.outline, log->records.back().object)))
       << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.02\"/>\n";
  }
  os << "<circle class=\"goal\" cx=\"" << fmt(sc.goal.x) << "\" cy=\"" << fmt(sc.goal.y)
     << "\" r=\"0.05\" fill=\"#d62728\"/>\n";
  os << "</g>\n";

  os << "<g class=\"legend\" font-size=\"0.15\" font-family=\"sans-serif\">\n";
  const double lx = W - legend_w + 0.1;
  for (size_t i = 0; i < modes.size(); ++i) {
    const double ly = pad + 0.25 * static_cast<double>(i);
    os << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 0.1) << "\" width=\"0.2\" height=\"0.1\" fill=\""
       << colour(i) << "\"/>";
    os << "<text class=\"legend-item\" data-mode=\"" << i << "\" x=\"" << fmt(lx + 0.3) << "\" y=\"" << fmt(ly)
       << "\">mode " << i << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace pushcraft
