#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evagg/lp_core.hpp"
#include "evagg/simplex.hpp"

namespace evagg::lp {

namespace {

LpSolution run(SimplexEngine& engine) {
  const LpStatus status = engine.solve();
  if (status != LpStatus::kOptimal) {
    LpSolution out;
    out.status = status;
    out.iterations = engine.iterations();
    return out;
  }
  LpSolution out = engine.solution();
  out.status = status;
  return out;
}

}  // namespace

LpSolution solve_lp(const LinearModel& model) {
  SimplexEngine engine(model);
  return run(engine);
}

LpSolution solve_lp(const LinearModel& model, const Basis& start) {
  SimplexEngine engine(model);
  engine.set_basis(start);
  return run(engine);
}

DualityReport check_duality(const LinearModel& model,
                            const LpSolution& solution) {
  if (solution.status != LpStatus::kOptimal) {
    throw std::invalid_argument("duality check needs an optimal solution");
  }
  const int n = model.num_variables();
  const int m = model.num_constraints();
  if (static_cast<int>(solution.x.size()) != n ||
      static_cast<int>(solution.row_duals.size()) != m) {
    throw std::invalid_argument("solution is not sized to the model");
  }
  const auto& x = solution.x;
  const auto& y = solution.row_duals;

  DualityReport report;
  report.primal_residual = model.max_violation(x);
  report.primal_objective = model.evaluate_objective(x);

  // Reduced costs are recomputed from the row duals, not taken on trust.
  std::vector<double> d(model.objective());
  double dual_obj = model.objective_constant();
  for (int i = 0; i < m; ++i) {
    const Constraint& row = model.constraint(i);
    double activity = 0.0;
    for (const Term& t : row.terms) {
      d[t.var] -= t.coef * y[i];
      activity += t.coef * x[t.var];
    }
    dual_obj += row.rhs * y[i];
    if (row.sense == Sense::kGreaterEqual) {
      report.dual_residual = std::max(report.dual_residual, -y[i]);
    } else if (row.sense == Sense::kLessEqual) {
      report.dual_residual = std::max(report.dual_residual, y[i]);
    }
    if (row.sense != Sense::kEqual) {
      report.complementarity = std::max(
          report.complementarity, std::abs(y[i]) * std::abs(activity - row.rhs));
    }
  }
  for (int j = 0; j < n; ++j) {
    const Variable& v = model.variable(j);
    if (d[j] > 0.0) {
      if (std::isfinite(v.lower)) {
        dual_obj += d[j] * v.lower;
        report.complementarity =
            std::max(report.complementarity, d[j] * std::abs(x[j] - v.lower));
      } else {
        report.dual_residual = std::max(report.dual_residual, d[j]);
      }
    } else if (d[j] < 0.0) {
      if (std::isfinite(v.upper)) {
        dual_obj += d[j] * v.upper;
        report.complementarity =
            std::max(report.complementarity, -d[j] * std::abs(v.upper - x[j]));
      } else {
        report.dual_residual = std::max(report.dual_residual, -d[j]);
      }
    }
  }
  report.dual_objective = dual_obj;
  report.objective_gap = std::abs(report.primal_objective - dual_obj) /
                         std::max(1.0, std::abs(report.primal_objective));
  return report;
}

}  // namespace evagg::lp
