#include <doctest.h>

#include <algorithm>
#include <random>

#include "pushcraft/switching.hpp"

using namespace pushcraft;
using doctest::Approx;

namespace {

bool is_permutation(const std::vector<int>& p) {
  std::vector<int> s = p;
  std::sort(s.begin(), s.end());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != static_cast<int>(i)) return false;
  }
  return true;
}

void check_valid(const std::vector<double>& a, const std::vector<double>& b, const SwitchAssignment& s) {
  REQUIRE(s.paths.size() == a.size());
  CHECK(is_permutation(s.target));
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(s.paths[i].from == Approx(a[i]));
    CHECK(s.paths[i].at(1.0) == Approx(b[s.target[i]]).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("identity switch") {
  std::vector<double> t{0.1, 0.4, 0.8};
  auto s = assign_switch(t, t);
  check_valid(t, t, s);
  CHECK(s.balanced);
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(s.target[i] == static_cast<int>(i));
    CHECK(s.paths[i].delta == 0.0);
  }
}

TEST_CASE("two robots against brute force") {
  std::vector<double> a{0.0, 0.25}, b{0.5, 0.75};
  auto s = assign_switch(a, b);
  check_valid(a, b, s);
  CHECK_FALSE(paths_cross(s.paths));
  CHECK(s.max_fraction() <= 0.5 + 1e-12);

  // enumerate both permutations and both directions per robot; the best
  // non-crossing option must not be shorter than what we return
  double best = 1e9;
  for (int perm = 0; perm < 2; ++perm) {
    for (int dirs = 0; dirs < 4; ++dirs) {
      std::vector<BoundaryPath> p(2);
      for (int i = 0; i < 2; ++i) {
        const int j = perm ? 1 - i : i;
        double d = b[j] - a[i];
        d -= std::floor(d);
        if (dirs >> i & 1) d -= 1.0;
        p[i] = {a[i], b[j], d};
      }
      if (paths_cross(p)) continue;
      best = std::min(best, std::max(p[0].length_fraction(), p[1].length_fraction()));
    }
  }
  CHECK(s.max_fraction() == Approx(best));
}

TEST_CASE("crossing checker") {
  // head-on on the same stretch
  CHECK(paths_cross({{0.1, 0.3, 0.2}, {0.2, 0.0, -0.2}}));
  // same direction, no overtaking
  CHECK_FALSE(paths_cross({{0.1, 0.3, 0.2}, {0.2, 0.4, 0.2}}));
  // overtake: front robot stops early
  CHECK(paths_cross({{0.1, 0.4, 0.3}, {0.2, 0.25, 0.05}}));
  // wrap-around
  CHECK(paths_cross({{0.95, 0.1, 0.15}, {0.05, 0.9, -0.15}}));
}

TEST_CASE("random instances never cross and stay within half the perimeter") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  int fallbacks = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<double> a(n), b(n);
    for (auto& t : a) t = U(rng);
    for (auto& t : b) t = U(rng);
    auto s = assign_switch(a, b);
    check_valid(a, b, s);
    CHECK_FALSE(paths_cross(s.paths));
    CHECK(s.max_fraction() <= 0.5 + 1e-12);
    fallbacks += !s.balanced;
  }
  CHECK(fallbacks == 0);
}

TEST_CASE("degenerate antipodal pair uses the fallback") {
  auto s = assign_switch(std::vector<double>{0.0}, std::vector<double>{0.5});
  CHECK_FALSE(s.balanced);
  CHECK(s.max_fraction() == Approx(0.5));
}

TEST_CASE("boundary waypoints keep their offset") {
  Polygon sq({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
  for (double delta : {0.3, -0.3}) {
    BoundaryPath p{0.1, 0.1 + delta, delta};
    auto w = boundary_waypoints(sq, p, 0.15, 0.02);
    REQUIRE(w.size() > 10);
    CHECK((w.front() - (sq.boundary_point(p.from) - sq.boundary_inward_normal(p.from) * 0.15)).norm() < 1e-9);
    for (const auto& q : w) CHECK(point_polygon_distance(q, sq) == Approx(0.15).epsilon(1e-6));
    for (size_t i = 1; i < w.size(); ++i) CHECK((w[i] - w[i - 1]).norm() <= 0.0301);
  }
}
