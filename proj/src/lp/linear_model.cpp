#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evagg/lp_core.hpp"

namespace evagg::lp {

int LinearModel::add_variable(std::string name, double lower, double upper,
                              bool is_integer) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper ||
      lower == kInf || upper == -kInf) {
    throw std::invalid_argument("variable '" + name + "': invalid bounds");
  }
  if (var_index_.contains(name)) {
    throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
  const int index = num_variables();
  var_index_.emplace(name, index);
  variables_.push_back({std::move(name), lower, upper, is_integer});
  objective_.push_back(0.0);
  return index;
}

int LinearModel::add_constraint(std::string name, std::vector<Term> terms,
                                Sense sense, double rhs) {
  if (!std::isfinite(rhs)) {
    throw std::invalid_argument("constraint '" + name + "': non-finite rhs");
  }
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw std::invalid_argument("constraint '" + name +
                                  "' references an unregistered variable");
    }
    if (!std::isfinite(t.coef)) {
      throw std::invalid_argument("constraint '" + name +
                                  "': non-finite coefficient");
    }
  }
  if (row_index_.contains(name)) {
    throw std::invalid_argument("duplicate constraint name '" + name + "'");
  }
  // Merge repeated columns so each row holds one entry per variable.
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  merged.reserve(terms.size());
  for (const Term& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });

  const int index = num_constraints();
  row_index_.emplace(name, index);
  constraints_.push_back({std::move(name), std::move(merged), sense, rhs});
  return index;
}

void LinearModel::set_objective(int var, double coef) {
  if (!std::isfinite(coef)) {
    throw std::invalid_argument("non-finite objective coefficient");
  }
  objective_.at(var) = coef;
}

void LinearModel::add_objective(int var, double coef) {
  set_objective(var, objective_.at(var) + coef);
}

void LinearModel::set_bounds(int var, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("invalid bounds");
  }
  variables_.at(var).lower = lower;
  variables_.at(var).upper = upper;
}

int LinearModel::find_variable(std::string_view name) const {
  auto it = var_index_.find(std::string(name));
  return it == var_index_.end() ? -1 : it->second;
}

int LinearModel::find_constraint(std::string_view name) const {
  auto it = row_index_.find(std::string(name));
  return it == row_index_.end() ? -1 : it->second;
}

bool LinearModel::has_integers() const {
  return std::any_of(variables_.begin(), variables_.end(),
                     [](const Variable& v) { return v.is_integer; });
}

std::size_t LinearModel::num_nonzeros() const {
  std::size_t nnz = 0;
  for (const auto& c : constraints_) nnz += c.terms.size();
  return nnz;
}

double LinearModel::evaluate_objective(const std::vector<double>& x) const {
  double value = objective_constant_;
  for (int j = 0; j < num_variables(); ++j) value += objective_[j] * x[j];
  return value;
}

double LinearModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max(worst, variables_[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables_[j].upper);
  }
  for (const auto& c : constraints_) {
    double activity = 0.0;
    for (const Term& t : c.terms) activity += t.coef * x[t.var];
    switch (c.sense) {
      case Sense::kLessEqual:
        worst = std::max(worst, activity - c.rhs);
        break;
      case Sense::kGreaterEqual:
        worst = std::max(worst, c.rhs - activity);
        break;
      case Sense::kEqual:
        worst = std::max(worst, std::abs(activity - c.rhs));
        break;
    }
  }
  return worst;
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration_limit";
    case LpStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

}  // namespace evagg::lp
