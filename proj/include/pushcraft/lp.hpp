#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pushcraft::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status status);

struct Term {
  int var;
  double coef;
};

/// A linear program in the form
///   min c'x  s.t.  row_i(x) {<=,=,>=} b_i,  lower <= x <= upper.
/// Lower bounds must be finite; upper bounds may be infinite.
class Problem {
 public:
  int add_variable(double lower, double upper, double cost);
  void add_constraint(std::vector<Term> terms, Sense sense, double rhs);

  int num_variables() const { return static_cast<int>(cost_.size()); }
  int num_constraints() const { return static_cast<int>(rhs_.size()); }

 private:
  friend class Solver;
  std::vector<double> lower_, upper_, cost_;
  std::vector<std::vector<Term>> rows_;
  std::vector<Sense> sense_;
  std::vector<double> rhs_;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int max_iterations = 0;  // 0 => 50 * (rows + cols)
};

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

/// Dense bounded-variable primal simplex (two phases). Suitable for the
/// few-hundred-row problems that appear in contact force distribution.
Solution solve(const Problem& problem, const Options& options = {});

class LpError : public std::runtime_error {
 public:
  LpError(Status status, const std::string& what)
      : std::runtime_error(what + " (" + to_string(status) + ")"), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

}  // namespace pushcraft::lp
