#include <doctest.h>

#include <array>
#include <random>

#include "pushcraft/lp.hpp"

using namespace pushcraft::lp;

TEST_CASE("textbook maximization") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
  Problem p;
  int x = p.add_variable(0, kInf, -3);
  int y = p.add_variable(0, kInf, -5);
  p.add_constraint({{x, 1}}, Sense::LessEqual, 4);
  p.add_constraint({{y, 2}}, Sense::LessEqual, 12);
  p.add_constraint({{x, 3}, {y, 2}}, Sense::LessEqual, 18);
  auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-36));
  CHECK(s.x[0] == doctest::Approx(2));
  CHECK(s.x[1] == doctest::Approx(6));
}

TEST_CASE("equality and greater-equal rows need phase one") {
  // min x + y, x + y >= 2, x - y = 1 -> (1.5, 0.5)
  Problem p;
  int x = p.add_variable(0, kInf, 1);
  int y = p.add_variable(0, kInf, 1);
  p.add_constraint({{x, 1}, {y, 1}}, Sense::GreaterEqual, 2);
  p.add_constraint({{x, 1}, {y, -1}}, Sense::Equal, 1);
  auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(2));
  CHECK(s.x[0] == doctest::Approx(1.5));
  CHECK(s.x[1] == doctest::Approx(0.5));
}

TEST_CASE("infeasible and unbounded") {
  Problem p;
  int x = p.add_variable(0, 1, 1);
  p.add_constraint({{x, 1}}, Sense::GreaterEqual, 2);
  CHECK(solve(p).status == Status::Infeasible);

  Problem q;
  int a = q.add_variable(0, kInf, -1);
  int b = q.add_variable(0, kInf, 0);
  q.add_constraint({{a, 1}, {b, -1}}, Sense::LessEqual, 1);
  CHECK(solve(q).status == Status::Unbounded);
}

TEST_CASE("finite bounds and shifted lower bounds") {
  // min -x - y with -1 <= x <= 2, 3 <= y <= 5, x + y <= 6 -> objective -6
  Problem p;
  int x = p.add_variable(-1, 2, -1);
  int y = p.add_variable(3, 5, -1);
  p.add_constraint({{x, 1}, {y, 1}}, Sense::LessEqual, 6);
  auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-6));
  CHECK(s.x[0] >= -1 - 1e-12);
  CHECK(s.x[1] <= 5 + 1e-12);

  // min x with x in [-3, 4]
  Problem q;
  q.add_variable(-3, 4, 1);
  auto t = solve(q);
  REQUIRE(t.status == Status::Optimal);
  CHECK(t.x[0] == doctest::Approx(-3));
}

TEST_CASE("l1 fit of an overdetermined system") {
  // min |x - 1| + |x - 2| + |x - 10| -> median 2, objective 9
  Problem p;
  int x = p.add_variable(-100, 100, 0);
  for (double b : {1.0, 2.0, 10.0}) {
    int u = p.add_variable(0, kInf, 1);
    p.add_constraint({{x, 1}, {u, -1}}, Sense::LessEqual, b);
    p.add_constraint({{x, 1}, {u, 1}}, Sense::GreaterEqual, b);
  }
  auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(9));
  CHECK(s.x[0] == doctest::Approx(2));
}

TEST_CASE("degenerate redundant equalities") {
  Problem p;
  int x = p.add_variable(0, kInf, 1);
  int y = p.add_variable(0, kInf, 2);
  p.add_constraint({{x, 1}, {y, 1}}, Sense::Equal, 1);
  p.add_constraint({{x, 2}, {y, 2}}, Sense::Equal, 2);
  p.add_constraint({{x, 1}}, Sense::LessEqual, 1);
  auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(1));
}

// Random two-variable programs against brute-force enumeration of the
// pairwise constraint intersections.
TEST_CASE("random 2d programs match vertex enumeration") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 3 + trial % 4;
    std::vector<std::array<double, 3>> rows;  // a x + b y <= c
    for (int i = 0; i < m; ++i) rows.push_back({U(rng), U(rng), 0.2 + std::abs(U(rng))});
    rows.push_back({1, 0, 3});
    rows.push_back({0, 1, 3});
    const double cx = U(rng), cy = U(rng);
    Problem p;
    int x = p.add_variable(0, kInf, cx);
    int y = p.add_variable(0, kInf, cy);
    for (auto& r : rows) p.add_constraint({{x, r[0]}, {y, r[1]}}, Sense::LessEqual, r[2]);
    auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);

    auto all = rows;
    all.push_back({-1, 0, 0});
    all.push_back({0, -1, 0});
    double best = 1e300;
    for (size_t i = 0; i < all.size(); ++i) {
      for (size_t j = i + 1; j < all.size(); ++j) {
        double det = all[i][0] * all[j][1] - all[i][1] * all[j][0];
        if (std::abs(det) < 1e-12) continue;
        double vx = (all[i][2] * all[j][1] - all[i][1] * all[j][2]) / det;
        double vy = (all[i][0] * all[j][2] - all[i][2] * all[j][0]) / det;
        bool ok = true;
        for (auto& r : all) ok = ok && r[0] * vx + r[1] * vy <= r[2] + 1e-9;
        if (ok) best = std::min(best, cx * vx + cy * vy);
      }
    }
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-7));
    ++solved;
  }
  CHECK(solved == 300);
}
