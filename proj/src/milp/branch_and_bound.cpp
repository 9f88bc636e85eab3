#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "evagg/milp.hpp"
#include "evagg/simplex.hpp"

namespace evagg::milp {
namespace {

struct BoundChange {
  int var;
  double lower;
  double upper;
};

struct Node {
  std::vector<BoundChange> changes;
  double bound = -lp::kInf;
  std::int64_t id = 0;
};

bool integral(double v) {
  return std::abs(v - std::round(v)) <= kIntegralityTol;
}

class Search {
 public:
  Search(const lp::LinearModel& model, const BnbConfig& cfg)
      : model_(model), cfg_(cfg), engine_(model) {
    for (int j = 0; j < model.num_variables(); ++j) {
      if (model.variable(j).is_integer) ints_.push_back(j);
    }
    touched_.assign(model.num_variables(), 0);
  }

  MilpSolution run();

 private:
  double cutoff() const {
    if (!has_incumbent()) return lp::kInf;
    return best_obj_ -
           std::max(cfg_.abs_gap, cfg_.rel_gap * std::abs(best_obj_));
  }
  bool has_incumbent() const { return !best_x_.empty(); }

  void apply(const std::vector<BoundChange>& changes);
  void touch(int var) {
    if (!touched_[var]) {
      touched_[var] = 1;
      touched_list_.push_back(var);
    }
  }
  lp::LpStatus evaluate(const std::vector<BoundChange>& changes,
                        std::vector<double>& x, double& obj);
  void try_incumbent(const std::vector<double>& x,
                     const std::vector<BoundChange>& changes);
  bool accept(std::vector<double> x);
  bool limit_reached(std::int64_t nodes) const;

  const lp::LinearModel& model_;
  const BnbConfig& cfg_;
  lp::SimplexEngine engine_;
  std::vector<int> ints_;
  std::vector<char> touched_;
  std::vector<int> touched_list_;
  bool first_solve_ = true;

  std::vector<double> best_x_;
  double best_obj_ = lp::kInf;
  std::vector<double> history_;
  std::int64_t lp_iterations_ = 0;
  std::chrono::steady_clock::time_point start_;
};

void Search::apply(const std::vector<BoundChange>& changes) {
  for (int var : touched_list_) {
    const lp::Variable& v = model_.variable(var);
    engine_.set_bounds(var, v.lower, v.upper);
    touched_[var] = 0;
  }
  touched_list_.clear();
  for (const BoundChange& c : changes) {
    engine_.set_bounds(c.var, c.lower, c.upper);
    touch(c.var);
  }
}

lp::LpStatus Search::evaluate(const std::vector<BoundChange>& changes,
                              std::vector<double>& x, double& obj) {
  apply(changes);
  const std::int64_t before = engine_.iterations();
  if (first_solve_ && cfg_.root_basis) engine_.set_basis(*cfg_.root_basis);
  lp::LpStatus status = first_solve_ ? engine_.solve() : engine_.reoptimize();
  first_solve_ = false;
  lp_iterations_ += engine_.iterations() - before;
  if (status == lp::LpStatus::kIterationLimit ||
      status == lp::LpStatus::kNumericalFailure) {
    // Cold retry on a fresh engine before giving up on the node.
    lp::LinearModel copy = model_;
    for (int var : touched_list_) {
      copy.set_bounds(var, engine_.lower(var), engine_.upper(var));
    }
    lp::SimplexEngine cold(copy);
    status = cold.solve();
    lp_iterations_ += cold.iterations();
    if (status == lp::LpStatus::kOptimal) {
      x.assign(cold.values().begin(),
               cold.values().begin() + model_.num_variables());
      obj = cold.objective_value();
    }
    return status;
  }
  if (status == lp::LpStatus::kOptimal) {
    x.assign(engine_.values().begin(),
             engine_.values().begin() + model_.num_variables());
    obj = engine_.objective_value();
  }
  return status;
}

bool Search::accept(std::vector<double> x) {
  for (int j : ints_) {
    if (!integral(x[j])) return false;
    x[j] = std::round(x[j]);
  }
  if (model_.max_violation(x) > kFeasibilityTol) return false;
  const double obj = model_.evaluate_objective(x);
  if (obj >= best_obj_) return false;
  best_obj_ = obj;
  best_x_ = std::move(x);
  history_.push_back(obj);
  return true;
}

// Fixes the integer columns at their rounded values and re-solves the LP
// so the reported continuous part matches the rounded integers exactly.
void Search::try_incumbent(const std::vector<double>& x,
                           const std::vector<BoundChange>& changes) {
  std::vector<BoundChange> fixed = changes;
  for (int j : ints_) {
    const double r = std::round(x[j]);
    fixed.push_back({j, r, r});
  }
  std::vector<double> polished;
  double obj = 0.0;
  if (evaluate(fixed, polished, obj) == lp::LpStatus::kOptimal &&
      accept(polished)) {
    return;
  }
  accept(x);
}

bool Search::limit_reached(std::int64_t nodes) const {
  if (nodes >= cfg_.node_limit) return true;
  if (std::isfinite(cfg_.time_limit_seconds)) {
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_)
                               .count();
    if (elapsed > cfg_.time_limit_seconds) return true;
  }
  return false;
}

MilpSolution Search::run() {
  start_ = std::chrono::steady_clock::now();
  MilpSolution out;
  if (cfg_.initial_solution &&
      static_cast<int>(cfg_.initial_solution->size()) ==
          model_.num_variables()) {
    accept(*cfg_.initial_solution);
  }

  std::vector<Node> open;
  open.push_back({});
  std::int64_t next_id = 1;
  std::optional<Node> dive;
  double pruned_bound = lp::kInf;
  double lost_bound = lp::kInf;
  bool root = true;
  std::vector<double> x;

  while (dive || !open.empty()) {
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      auto best = std::min_element(
          open.begin(), open.end(), [](const Node& a, const Node& b) {
            return a.bound < b.bound || (a.bound == b.bound && a.id < b.id);
          });
      node = std::move(*best);
      *best = std::move(open.back());
      open.pop_back();
    }
    if (node.bound >= cutoff()) {
      pruned_bound = std::min(pruned_bound, node.bound);
      continue;
    }
    if (limit_reached(out.nodes)) {
      open.push_back(std::move(node));
      break;
    }

    double obj = 0.0;
    const lp::LpStatus status = evaluate(node.changes, x, obj);
    ++out.nodes;
    if (root) {
      root = false;
      if (status == lp::LpStatus::kUnbounded) {
        out.status = MilpStatus::kUnbounded;
        out.lp_iterations = lp_iterations_;
        return out;
      }
    }
    if (status == lp::LpStatus::kInfeasible) continue;
    if (status != lp::LpStatus::kOptimal) {
      lost_bound = std::min(lost_bound, node.bound);
      continue;
    }
    if (obj >= cutoff()) {
      pruned_bound = std::min(pruned_bound, obj);
      continue;
    }

    int branch_var = -1;
    double best_frac = 0.0;
    for (int j : ints_) {
      const double f = x[j] - std::floor(x[j]);
      const double dist = std::min(f, 1.0 - f);
      if (dist > kIntegralityTol && dist > best_frac) {
        best_frac = dist;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      try_incumbent(x, node.changes);
      continue;
    }

    ++out.branches;
    const double v = x[branch_var];
    const double lo = engine_.lower(branch_var);
    const double up = engine_.upper(branch_var);
    Node down{node.changes, obj, next_id++};
    down.changes.push_back({branch_var, lo, std::floor(v)});
    Node upper{std::move(node.changes), obj, next_id++};
    upper.changes.push_back({branch_var, std::ceil(v), up});
    if (v - std::floor(v) >= 0.5) {
      dive = std::move(upper);
      open.push_back(std::move(down));
    } else {
      dive = std::move(down);
      open.push_back(std::move(upper));
    }
  }

  double open_bound = lp::kInf;
  for (const Node& n : open) open_bound = std::min(open_bound, n.bound);
  const bool exhausted = open.empty();

  out.lp_iterations = lp_iterations_;
  out.incumbent_history = history_;
  if (has_incumbent()) {
    out.x = best_x_;
    out.objective = best_obj_;
  }
  double bound = std::min({open_bound, pruned_bound, lost_bound});
  if (has_incumbent()) bound = std::min(bound, best_obj_);
  out.bound = bound;
  if (has_incumbent()) out.gap = std::abs(best_obj_ - bound);

  if (exhausted && std::isinf(lost_bound)) {
    out.status = has_incumbent() ? MilpStatus::kOptimal
                                 : MilpStatus::kInfeasible;
  } else if (exhausted) {
    out.status = has_incumbent() ? MilpStatus::kGapLimit
                                 : MilpStatus::kNumericalFailure;
  } else {
    out.status = has_incumbent() ? MilpStatus::kGapLimit
                                 : MilpStatus::kNodeLimit;
  }
  return out;
}

}  // namespace

void validate(const BnbConfig& cfg) {
  if (!(cfg.abs_gap > 0.0) || !(cfg.rel_gap > 0.0)) {
    throw std::invalid_argument("branch-and-bound gaps must be positive");
  }
  if (cfg.node_limit < 1) {
    throw std::invalid_argument("node_limit must be at least 1");
  }
}

std::string_view to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::kOptimal:
      return "optimal";
    case MilpStatus::kInfeasible:
      return "infeasible";
    case MilpStatus::kGapLimit:
      return "gap_limit";
    case MilpStatus::kNodeLimit:
      return "node_limit";
    case MilpStatus::kUnbounded:
      return "unbounded";
    case MilpStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

MilpSolution solve_milp(const lp::LinearModel& model, const BnbConfig& cfg) {
  validate(cfg);
  if (!model.has_integers()) {
    const lp::LpSolution lp = lp::solve_lp(model);
    MilpSolution out;
    out.nodes = 1;
    out.lp_iterations = lp.iterations;
    switch (lp.status) {
      case lp::LpStatus::kOptimal:
        out.status = MilpStatus::kOptimal;
        out.x = lp.x;
        out.objective = out.bound = lp.objective;
        out.gap = 0.0;
        out.incumbent_history.push_back(lp.objective);
        break;
      case lp::LpStatus::kInfeasible:
        out.status = MilpStatus::kInfeasible;
        break;
      case lp::LpStatus::kUnbounded:
        out.status = MilpStatus::kUnbounded;
        break;
      default:
        out.status = MilpStatus::kNumericalFailure;
        break;
    }
    return out;
  }
  Search search(model, cfg);
  return search.run();
}

}  // namespace evagg::milp
