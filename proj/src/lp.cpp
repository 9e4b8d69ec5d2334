#include "pushcraft/lp.hpp"

#include <algorithm>
#include <cmath>

namespace pushcraft::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

int Problem::add_variable(double lower, double upper, double cost) {
  if (!std::isfinite(lower)) throw std::invalid_argument("lp: lower bound must be finite");
  if (upper < lower) throw std::invalid_argument("lp: upper bound below lower bound");
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void Problem::add_constraint(std::vector<Term> terms, Sense sense, double rhs) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) throw std::out_of_range("lp: unknown variable");
  }
  rows_.push_back(std::move(terms));
  sense_.push_back(sense);
  rhs_.push_back(rhs);
}

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

}  // namespace

class Solver {
 public:
  Solver(const Problem& p, const Options& o) : opt_(o) { build(p); }

  Solution run(const Problem& p) {
    Solution sol;
    const int limit = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m_ + ncol_) + 1000;

    // Phase 1: drive artificial variables to zero.
    std::vector<double> phase1(ncol_, 0.0);
    for (int j = first_art_; j < ncol_; ++j) phase1[j] = 1.0;
    Status st = iterate(phase1, limit, sol.iterations);
    if (st == Status::IterationLimit) {
      sol.status = st;
      return sol;
    }
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= first_art_) infeas += beta_[i];
    }
    double scale = 1.0;
    for (double b : rhs_) scale = std::max(scale, std::abs(b));
    if (infeas > 1e-7 * scale) {
      sol.status = Status::Infeasible;
      return sol;
    }
    evict_artificials();
    for (int j = first_art_; j < ncol_; ++j) {
      upper_[j] = 0.0;
      if (state_[j] != VarState::Basic) state_[j] = VarState::AtLower;
    }

    // Phase 2 on the true objective.
    st = iterate(cost_, limit, sol.iterations);
    sol.status = st;
    if (st != Status::Optimal) return sol;

    std::vector<double> values(ncol_, 0.0);
    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] == VarState::AtUpper) values[j] = upper_[j];
    }
    for (int i = 0; i < m_; ++i) values[basis_[i]] = beta_[i];

    sol.x.resize(n_);
    sol.objective = 0.0;
    for (int j = 0; j < n_; ++j) {
      double v = values[j];
      if (v < 0.0) v = 0.0;
      if (v > upper_[j]) v = upper_[j];
      sol.x[j] = v + p.lower_[j];
      sol.objective += p.cost_[j] * sol.x[j];
    }
    return sol;
  }

 private:
  void build(const Problem& p) {
    n_ = p.num_variables();
    m_ = p.num_constraints();

    int n_slack = 0;
    for (auto s : p.sense_) n_slack += (s != Sense::Equal);

    // Shift variables so every lower bound is zero.
    rhs_ = p.rhs_;
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : p.rows_[i]) rhs_[i] -= t.coef * p.lower_[t.var];
    }

    // Decide which rows need an artificial start column.
    std::vector<double> sign(m_, 1.0);
    std::vector<int> slack_col(m_, -1);
    std::vector<bool> needs_art(m_, true);
    int next_slack = n_;
    for (int i = 0; i < m_; ++i) {
      double slack_coef = 0.0;
      if (p.sense_[i] == Sense::LessEqual) slack_coef = 1.0;
      if (p.sense_[i] == Sense::GreaterEqual) slack_coef = -1.0;
      if (slack_coef != 0.0) slack_col[i] = next_slack++;
      if (rhs_[i] < 0.0) sign[i] = -1.0;
      needs_art[i] = !(slack_coef * sign[i] > 0.0);
    }
    int n_art = static_cast<int>(std::count(needs_art.begin(), needs_art.end(), true));
    first_art_ = n_ + n_slack;
    ncol_ = first_art_ + n_art;

    tab_.assign(static_cast<size_t>(m_) * ncol_, 0.0);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, -1);
    state_.assign(ncol_, VarState::AtLower);
    upper_.assign(ncol_, kInf);
    cost_.assign(ncol_, 0.0);
    for (int j = 0; j < n_; ++j) {
      upper_[j] = p.upper_[j] - p.lower_[j];
      cost_[j] = p.cost_[j];
    }

    int next_art = first_art_;
    for (int i = 0; i < m_; ++i) {
      double* row = &tab_[static_cast<size_t>(i) * ncol_];
      for (const auto& t : p.rows_[i]) row[t.var] += sign[i] * t.coef;
      if (slack_col[i] >= 0) {
        double slack_coef = p.sense_[i] == Sense::LessEqual ? 1.0 : -1.0;
        row[slack_col[i]] = sign[i] * slack_coef;
      }
      rhs_[i] *= sign[i];
      beta_[i] = rhs_[i];
      if (needs_art[i]) {
        row[next_art] = 1.0;
        basis_[i] = next_art++;
      } else {
        basis_[i] = slack_col[i];
      }
      state_[basis_[i]] = VarState::Basic;
    }
  }

  double* row(int i) { return &tab_[static_cast<size_t>(i) * ncol_]; }

  void compute_reduced_costs(const std::vector<double>& c) {
    d_ = c;
    for (int i = 0; i < m_; ++i) {
      double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      const double* r = row(i);
      for (int j = 0; j < ncol_; ++j) d_[j] -= cb * r[j];
    }
    for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  void pivot(int r, int s) {
    double* pr = row(r);
    const double inv = 1.0 / pr[s];
    for (int j = 0; j < ncol_; ++j) pr[j] *= inv;
    pr[s] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = row(i);
      const double f = pi[s];
      if (f == 0.0) continue;
      for (int j = 0; j < ncol_; ++j) pi[j] -= f * pr[j];
      pi[s] = 0.0;
    }
    const double f = d_[s];
    if (f != 0.0) {
      for (int j = 0; j < ncol_; ++j) d_[j] -= f * pr[j];
      d_[s] = 0.0;
    }
  }

  Status iterate(const std::vector<double>& c, int limit, int& iterations) {
    compute_reduced_costs(c);
    int degenerate_streak = 0;
    for (;;) {
      if (iterations >= limit) return Status::IterationLimit;
      const bool bland = degenerate_streak > 50;

      int s = -1;
      double best = 0.0;
      for (int j = 0; j < ncol_; ++j) {
        if (state_[j] == VarState::Basic) continue;
        double gain = 0.0;
        if (state_[j] == VarState::AtLower && upper_[j] > 0.0 && d_[j] < -opt_.optimality_tol) {
          gain = -d_[j];
        } else if (state_[j] == VarState::AtUpper && d_[j] > opt_.optimality_tol) {
          gain = d_[j];
        }
        if (gain <= 0.0) continue;
        if (bland) {
          s = j;
          break;
        }
        if (gain > best) {
          best = gain;
          s = j;
        }
      }
      if (s < 0) return Status::Optimal;
      ++iterations;

      const double dir = state_[s] == VarState::AtLower ? 1.0 : -1.0;
      double theta = upper_[s];
      int leave = -1;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = row(i)[s];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const double delta = -dir * a;
        const int b = basis_[i];
        double lim;
        bool to_upper;
        if (delta < 0.0) {
          lim = std::max(beta_[i], 0.0) / -delta;
          to_upper = false;
        } else {
          if (!std::isfinite(upper_[b])) continue;
          lim = std::max(upper_[b] - beta_[i], 0.0) / delta;
          to_upper = true;
        }
        bool take = false;
        if (lim < theta - 1e-12) {
          take = true;
        } else if (leave >= 0 && lim <= theta + 1e-12) {
          take = bland ? b < basis_[leave] : std::abs(a) > leave_pivot;
        }
        if (take) {
          theta = lim;
          leave = i;
          leave_to_upper = to_upper;
          leave_pivot = std::abs(a);
        }
      }

      if (leave < 0 && !std::isfinite(theta)) return Status::Unbounded;
      degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;

      for (int i = 0; i < m_; ++i) {
        const double a = row(i)[s];
        if (a != 0.0) beta_[i] -= dir * a * theta;
      }

      if (leave < 0) {
        state_[s] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
        continue;
      }

      const int out = basis_[leave];
      state_[out] = leave_to_upper ? VarState::AtUpper : VarState::AtLower;
      const double entering_value = dir > 0 ? theta : upper_[s] - theta;
      pivot(leave, s);
      basis_[leave] = s;
      state_[s] = VarState::Basic;
      beta_[leave] = entering_value;
    }
  }

  void evict_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < first_art_) continue;
      const double* pr = row(r);
      int best = -1;
      double mag = 1e-9;
      for (int j = 0; j < first_art_; ++j) {
        if (state_[j] == VarState::Basic) continue;
        if (std::abs(pr[j]) > mag) {
          mag = std::abs(pr[j]);
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row
      const double value = state_[best] == VarState::AtUpper ? upper_[best] : 0.0;
      const int out = basis_[r];
      // Shift of the artificial's residual value (zero up to tolerance) is ignored.
      pivot(r, best);
      state_[out] = VarState::AtLower;
      basis_[r] = best;
      state_[best] = VarState::Basic;
      beta_[r] = value;
    }
  }

  Options opt_;
  int n_ = 0, m_ = 0, ncol_ = 0, first_art_ = 0;
  std::vector<double> tab_, beta_, rhs_, upper_, cost_, d_;
  std::vector<int> basis_;
  std::vector<VarState> state_;
};

Solution solve(const Problem& problem, const Options& options) {
  Solver solver(problem, options);
  return solver.run(problem);
}

}  // namespace pushcraft::lp
