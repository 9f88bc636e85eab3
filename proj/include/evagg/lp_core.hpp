#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace evagg::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Certification tolerances for an optimal LP solve. Fixed, not per-solve.
inline constexpr double kPrimalFeasTol = 1e-7;
inline constexpr double kDualFeasTol = 1e-7;
inline constexpr double kComplementarityTol = 1e-6;
inline constexpr double kObjectiveGapTol = 1e-6;

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

struct Term {
  int var;
  double coef;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  bool is_integer = false;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// A minimization problem over bounded variables and linear rows.
//
// Names are unique across variables and unique across constraints; the
// registry maps a variable name to its column. All coefficients must be
// finite and every term must reference a registered variable.
class LinearModel {
 public:
  int add_variable(std::string name, double lower, double upper,
                   bool is_integer = false);
  int add_constraint(std::string name, std::vector<Term> terms, Sense sense,
                     double rhs);

  void set_objective(int var, double coef);
  void add_objective(int var, double coef);
  void set_objective_constant(double value) { objective_constant_ = value; }
  void set_bounds(int var, double lower, double upper);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Variable& variable(int j) const { return variables_.at(j); }
  const Constraint& constraint(int i) const { return constraints_.at(i); }
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  // -1 when the name is not registered.
  int find_variable(std::string_view name) const;
  int find_constraint(std::string_view name) const;

  bool has_integers() const;
  std::size_t num_nonzeros() const;

  // Objective value c'x + constant, summed in column order.
  double evaluate_objective(const std::vector<double>& x) const;
  // Largest absolute row or bound violation at x.
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
};

enum class LpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumericalFailure,
};

std::string_view to_string(LpStatus status);

enum class BasisStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

// Simplex basis: one status per column and one per row (the row's logical).
struct Basis {
  std::vector<BasisStatus> columns;
  std::vector<BasisStatus> rows;
};

struct LpSolution {
  LpStatus status = LpStatus::kNumericalFailure;
  std::vector<double> x;
  // Sensitivity of the optimal value to each row's right-hand side.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  std::int64_t iterations = 0;
  Basis basis;  // final basis when optimal
};

// Solves the continuous relaxation (integrality flags are ignored).
LpSolution solve_lp(const LinearModel& model);
// Same, starting from `start` (repaired if it is not a valid basis).
LpSolution solve_lp(const LinearModel& model, const Basis& start);

struct DualityReport {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double objective_gap = 0.0;  // relative to max(1, |primal objective|)

  bool certified() const {
    return primal_residual <= kPrimalFeasTol && dual_residual <= kDualFeasTol &&
           complementarity <= kComplementarityTol &&
           objective_gap <= kObjectiveGapTol;
  }
};

// Residuals of the primal/dual pair carried by `solution`. Throws
// std::invalid_argument unless the solution is optimal and sized to the model.
DualityReport check_duality(const LinearModel& model,
                            const LpSolution& solution);

}  // namespace evagg::lp
