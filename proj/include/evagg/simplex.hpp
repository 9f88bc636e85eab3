#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "evagg/lp_core.hpp"

namespace evagg::lp {

class BasisFactor;

// Bounded-variable revised simplex over the rows of a LinearModel.
//
// Each row i gets a logical variable r_i with A x - r = 0 and the row's
// sense encoded as bounds on r_i, so every column (structural or logical)
// is a bounded variable and the all-logical basis is always available.
//
// solve() starts with the dual simplex (bound flipping ratio test, dual
// steepest edge pricing) when boxed columns can be placed so that the
// current or the all-logical basis is dual feasible, and otherwise runs the
// two-phase primal simplex. After bound changes on an optimal engine,
// reoptimize() continues with the dual simplex from the previous basis.
class SimplexEngine {
 public:
  explicit SimplexEngine(const LinearModel& model);
  ~SimplexEngine();
  SimplexEngine(const SimplexEngine&) = delete;
  SimplexEngine& operator=(const SimplexEngine&) = delete;

  LpStatus solve();
  LpStatus reoptimize();

  void set_bounds(int var, double lower, double upper);

  // Current basis, and a starting basis for the next solve(). A start with
  // the wrong number of basic entries or a singular basis matrix is
  // completed or repaired with logical columns.
  Basis basis() const;
  void set_basis(const Basis& start);
  double lower(int var) const { return lo_[var]; }
  double upper(int var) const { return up_[var]; }

  // Primal values, row duals and reduced costs of the structural columns,
  // recomputed from a fresh factorization of the final basis.
  LpSolution solution();
  double objective_value() const;
  const std::vector<double>& values() const { return x_; }

  std::int64_t iterations() const { return iterations_; }
  int num_rows() const { return m_; }
  int num_cols() const { return n_; }

 private:
  enum class VarState : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

  void build(const LinearModel& model);
  void crash_basis();
  bool refactor();
  void recompute_primal();
  void recompute_duals(const std::vector<double>& cost);
  void column(int j, std::vector<double>& out) const;
  double dot_column(int j, const std::vector<double>& y) const;
  double infeasibility(int j) const;
  double max_primal_infeasibility() const;
  void place_nonbasic(int j);
  void pivot(int pos, int entering, const std::vector<double>& alpha,
             VarState leaving_state);

  LpStatus primal_loop();
  LpStatus dual_loop();
  bool dual_feasible() const;
  bool make_dual_feasible();
  void repair_duals();
  LpStatus try_dual();
  LpStatus perturbed_dual();
  void reset_to_slack_basis();

  int m_ = 0;
  int n_ = 0;
  // Structural columns in compressed sparse column form.
  std::vector<int> col_start_;
  std::vector<int> row_index_;
  std::vector<double> value_;
  std::vector<double> cost_;
  double cost_constant_ = 0.0;
  // Row-wise copy of the structural part, for pivot rows.
  std::vector<int> row_start_;
  std::vector<int> row_col_;
  std::vector<double> row_value_;

  std::vector<double> lo_;
  std::vector<double> up_;
  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;     // variable occupying each basis position
  std::vector<int> position_;  // basis position of a variable, or -1
  std::vector<double> d_;      // reduced costs (phase-2 costs)
  bool optimal_ = false;
  std::vector<double> dse_;  // dual steepest edge weights by basis position
  bool dse_valid_ = false;

  std::unique_ptr<BasisFactor> factor_;
  std::int64_t iterations_ = 0;
  std::int64_t iteration_limit_ = 0;
};

}  // namespace evagg::lp
