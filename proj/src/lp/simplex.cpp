#include "evagg/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <random>

#include "lp/basis_factor.hpp"

namespace evagg::lp {
namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorInterval = 100;
constexpr int kDegenerateBeforeBland = 50;
constexpr int kMaxRecoveries = 8;
constexpr double kPerturbation = 5e-7;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

SimplexEngine::SimplexEngine(const LinearModel& model)
    : factor_(std::make_unique<BasisFactor>()) {
  build(model);
}

SimplexEngine::~SimplexEngine() = default;

void SimplexEngine::build(const LinearModel& model) {
  m_ = model.num_constraints();
  n_ = model.num_variables();
  const int total = n_ + m_;

  std::vector<int> count(n_, 0);
  for (const auto& row : model.constraints()) {
    for (const Term& t : row.terms) ++count[t.var];
  }
  col_start_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j];
  row_index_.assign(col_start_[n_], 0);
  value_.assign(col_start_[n_], 0.0);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : model.constraint(i).terms) {
      row_index_[fill[t.var]] = i;
      value_[fill[t.var]] = t.coef;
      ++fill[t.var];
    }
  }
  row_start_.assign(m_ + 1, 0);
  for (int i = 0; i < m_; ++i) {
    row_start_[i + 1] =
        row_start_[i] + static_cast<int>(model.constraint(i).terms.size());
  }
  row_col_.assign(row_start_[m_], 0);
  row_value_.assign(row_start_[m_], 0.0);
  for (int i = 0; i < m_; ++i) {
    int k = row_start_[i];
    for (const Term& t : model.constraint(i).terms) {
      row_col_[k] = t.var;
      row_value_[k++] = t.coef;
    }
  }

  lo_.assign(total, 0.0);
  up_.assign(total, 0.0);
  cost_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = model.variable(j).lower;
    up_[j] = model.variable(j).upper;
    cost_[j] = model.objective()[j];
  }
  for (int i = 0; i < m_; ++i) {
    const Constraint& row = model.constraint(i);
    const int k = n_ + i;
    switch (row.sense) {
      case Sense::kLessEqual:
        lo_[k] = -kInf;
        up_[k] = row.rhs;
        break;
      case Sense::kGreaterEqual:
        lo_[k] = row.rhs;
        up_[k] = kInf;
        break;
      case Sense::kEqual:
        lo_[k] = row.rhs;
        up_[k] = row.rhs;
        break;
    }
  }
  cost_constant_ = model.objective_constant();

  x_.assign(total, 0.0);
  state_.assign(total, VarState::kAtLower);
  position_.assign(total, -1);
  basis_.assign(m_, -1);
  d_.assign(total, 0.0);
  iteration_limit_ = 200LL * (m_ + n_) + 10000;
  reset_to_slack_basis();
  crash_basis();
}

void SimplexEngine::place_nonbasic(int j) {
  if (finite(lo_[j])) {
    state_[j] = VarState::kAtLower;
    x_[j] = lo_[j];
  } else if (finite(up_[j])) {
    state_[j] = VarState::kAtUpper;
    x_[j] = up_[j];
  } else {
    state_[j] = VarState::kFree;
    x_[j] = 0.0;
  }
}

void SimplexEngine::reset_to_slack_basis() {
  for (int j = 0; j < n_; ++j) {
    position_[j] = -1;
    place_nonbasic(j);
  }
  for (int i = 0; i < m_; ++i) {
    basis_[i] = n_ + i;
    position_[n_ + i] = i;
    state_[n_ + i] = VarState::kBasic;
  }
  optimal_ = false;
  dse_.assign(m_, 1.0);
  dse_valid_ = true;
  refactor();
  recompute_primal();
}

// Triangular crash: for each equality row, in order, make basic a
// structural column that has no entry in any row already claimed by a
// structural. The resulting basis is triangular up to permutation.
void SimplexEngine::crash_basis() {
  if (m_ == 0) return;
  std::vector<std::vector<std::pair<int, double>>> rows(m_);
  for (int j = 0; j < n_; ++j) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      rows[row_index_[k]].push_back({j, value_[k]});
    }
  }
  std::vector<char> claimed(m_, 0);
  int swapped = 0;
  for (int i = 0; i < m_; ++i) {
    if (lo_[n_ + i] != up_[n_ + i]) continue;
    double row_max = 0.0;
    for (auto [j, a] : rows[i]) row_max = std::max(row_max, std::abs(a));
    int best = -1;
    int best_len = 0;
    for (auto [j, a] : rows[i]) {
      if (position_[j] >= 0 || lo_[j] == up_[j]) continue;
      if (std::abs(a) < 0.1 * row_max) continue;
      bool clean = true;
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        if (row_index_[k] != i && claimed[row_index_[k]]) {
          clean = false;
          break;
        }
      }
      if (!clean) continue;
      const int len = col_start_[j + 1] - col_start_[j];
      if (best < 0 || len < best_len) {
        best = j;
        best_len = len;
      }
    }
    if (best < 0) continue;
    claimed[i] = 1;
    const int logical = n_ + i;
    basis_[i] = best;
    position_[best] = i;
    state_[best] = VarState::kBasic;
    position_[logical] = -1;
    place_nonbasic(logical);
    ++swapped;
  }
  if (swapped == 0) return;
  dse_valid_ = false;
  if (!refactor()) {
    reset_to_slack_basis();
    return;
  }
  recompute_primal();
}

// On a singular basis the columns left without a pivot are swapped for the
// logicals of the uncovered rows and the factorization is retried once.
bool SimplexEngine::refactor() {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<BasisFactor::SparseColumn> cols(m_);
    for (int p = 0; p < m_; ++p) {
      const int j = basis_[p];
      if (j < n_) {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
          cols[p].rows.push_back(row_index_[k]);
          cols[p].values.push_back(value_[k]);
        }
      } else {
        cols[p].rows.push_back(j - n_);
        cols[p].values.push_back(-1.0);
      }
    }
    if (factor_->factorize(m_, cols)) return true;
    if (attempt == 1) break;
    const auto& bad_pos = factor_->deficient_positions();
    const auto& bad_row = factor_->deficient_rows();
    for (std::size_t k = 0; k < bad_pos.size(); ++k) {
      const int logical = n_ + bad_row[k];
      if (position_[logical] >= 0) return false;
      const int p = bad_pos[k];
      const int j = basis_[p];
      basis_[p] = logical;
      position_[logical] = p;
      state_[logical] = VarState::kBasic;
      position_[j] = -1;
      place_nonbasic(j);
    }
    dse_valid_ = false;
    optimal_ = false;
  }
  return false;
}

void SimplexEngine::recompute_primal() {
  if (m_ == 0) return;
  std::vector<double> rhs(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      rhs[row_index_[k]] -= value_[k] * x_[j];
    }
  }
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    if (state_[j] != VarState::kBasic) rhs[i] += x_[j];
  }
  factor_->ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[basis_[p]] = rhs[p];
}

void SimplexEngine::recompute_duals(const std::vector<double>& cost) {
  std::vector<double> y(m_, 0.0);
  for (int p = 0; p < m_; ++p) y[p] = cost[basis_[p]];
  if (m_ > 0) factor_->btran(y);
  for (int j = 0; j < n_; ++j) {
    d_[j] = state_[j] == VarState::kBasic ? 0.0 : cost[j] - dot_column(j, y);
  }
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    d_[j] = state_[j] == VarState::kBasic ? 0.0 : cost[j] + y[i];
  }
}

void SimplexEngine::column(int j, std::vector<double>& out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (j < n_) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      out[row_index_[k]] = value_[k];
    }
  } else {
    out[j - n_] = -1.0;
  }
}

double SimplexEngine::dot_column(int j, const std::vector<double>& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
    s += value_[k] * y[row_index_[k]];
  }
  return s;
}

double SimplexEngine::infeasibility(int j) const {
  if (x_[j] < lo_[j]) return lo_[j] - x_[j];
  if (x_[j] > up_[j]) return x_[j] - up_[j];
  return 0.0;
}

double SimplexEngine::max_primal_infeasibility() const {
  double worst = 0.0;
  for (int p = 0; p < m_; ++p) worst = std::max(worst, infeasibility(basis_[p]));
  return worst;
}

void SimplexEngine::pivot(int pos, int entering,
                          const std::vector<double>& alpha,
                          VarState leaving_state) {
  const int leaving = basis_[pos];
  factor_->update(pos, alpha);
  basis_[pos] = entering;
  position_[entering] = pos;
  state_[entering] = VarState::kBasic;
  position_[leaving] = -1;
  state_[leaving] = leaving_state;
  if (leaving_state == VarState::kAtLower) {
    x_[leaving] = lo_[leaving];
  } else if (leaving_state == VarState::kAtUpper) {
    x_[leaving] = up_[leaving];
  }
}

void SimplexEngine::set_bounds(int var, double lower, double upper) {
  lo_[var] = lower;
  up_[var] = upper;
  if (state_[var] == VarState::kBasic) return;
  if (state_[var] == VarState::kAtLower && finite(lower)) {
    x_[var] = lower;
  } else if (state_[var] == VarState::kAtUpper && finite(upper)) {
    x_[var] = upper;
  } else {
    place_nonbasic(var);
  }
}

Basis SimplexEngine::basis() const {
  auto status = [&](int j) {
    switch (state_[j]) {
      case VarState::kBasic:
        return BasisStatus::kBasic;
      case VarState::kAtLower:
        return BasisStatus::kAtLower;
      case VarState::kAtUpper:
        return BasisStatus::kAtUpper;
      case VarState::kFree:
        break;
    }
    return BasisStatus::kFree;
  };
  Basis out;
  for (int j = 0; j < n_; ++j) out.columns.push_back(status(j));
  for (int i = 0; i < m_; ++i) out.rows.push_back(status(n_ + i));
  return out;
}

void SimplexEngine::set_basis(const Basis& start) {
  if (static_cast<int>(start.columns.size()) != n_ ||
      static_cast<int>(start.rows.size()) != m_) {
    throw std::invalid_argument("basis size does not match the model");
  }
  optimal_ = false;
  dse_valid_ = false;
  std::vector<int> basic;
  for (int j = 0; j < n_ + m_; ++j) {
    const BasisStatus s = j < n_ ? start.columns[j] : start.rows[j - n_];
    position_[j] = -1;
    if (s == BasisStatus::kBasic && static_cast<int>(basic.size()) < m_) {
      basic.push_back(j);
      state_[j] = VarState::kBasic;
      continue;
    }
    place_nonbasic(j);
    if (s == BasisStatus::kAtUpper && finite(up_[j])) {
      state_[j] = VarState::kAtUpper;
      x_[j] = up_[j];
    } else if (s == BasisStatus::kAtLower && finite(lo_[j])) {
      state_[j] = VarState::kAtLower;
      x_[j] = lo_[j];
    }
  }
  // Short bases are padded with nonbasic logicals; refactor() swaps any
  // that leave the matrix singular.
  for (int i = 0; i < m_ && static_cast<int>(basic.size()) < m_; ++i) {
    const int j = n_ + i;
    if (state_[j] != VarState::kBasic) {
      basic.push_back(j);
      state_[j] = VarState::kBasic;
    }
  }
  for (int p = 0; p < m_; ++p) {
    basis_[p] = basic[p];
    position_[basic[p]] = p;
  }
  if (!refactor()) {
    reset_to_slack_basis();
    return;
  }
  recompute_primal();
}

double SimplexEngine::objective_value() const {
  double v = cost_constant_;
  for (int j = 0; j < n_; ++j) v += cost_[j] * x_[j];
  return v;
}

LpStatus SimplexEngine::solve() {
  optimal_ = false;
  const LpStatus dual = try_dual();
  if (dual == LpStatus::kOptimal || dual == LpStatus::kInfeasible) return dual;
  return primal_loop();
}

// Dual simplex from the current basis, or from the all-logical basis when
// the current one cannot be made dual feasible. Returns kNumericalFailure
// when neither applies.
LpStatus SimplexEngine::try_dual() {
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) reset_to_slack_basis();
    if (!refactor()) continue;
    recompute_duals(cost_);
    if (!make_dual_feasible()) continue;
    recompute_primal();
    return perturbed_dual();
  }
  return LpStatus::kNumericalFailure;
}

// Dual simplex on costs shifted away from zero reduced costs, which breaks
// the long runs of degenerate pivots on these models. The shift is removed
// at the end and any dual infeasibility it hid is cleaned up by the primal.
LpStatus SimplexEngine::perturbed_dual() {
  const std::vector<double> original = cost_;
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
    const double xi = kPerturbation * (1.0 + std::abs(cost_[j])) * u(rng);
    if (state_[j] == VarState::kAtLower) {
      cost_[j] += xi;
      d_[j] += xi;
    } else if (state_[j] == VarState::kAtUpper) {
      cost_[j] -= xi;
      d_[j] -= xi;
    }
  }
  const LpStatus status = dual_loop();
  cost_ = original;
  if (status != LpStatus::kOptimal) {
    optimal_ = false;
    return status;
  }
  recompute_duals(cost_);
  if (dual_feasible()) return LpStatus::kOptimal;
  optimal_ = false;
  dse_valid_ = false;
  return primal_loop();
}

// Drift in the updated reduced costs can leave small dual infeasibilities
// after a refactorization. Boxed columns move to the other bound, the rest
// get their working cost shifted; perturbed_dual() restores the true costs.
void SimplexEngine::repair_duals() {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
    const double dj = d_[j];
    const bool wrong = (state_[j] == VarState::kAtLower && dj < -kOptTol) ||
                       (state_[j] == VarState::kAtUpper && dj > kOptTol) ||
                       (state_[j] == VarState::kFree && std::abs(dj) > kOptTol);
    if (!wrong) continue;
    if (state_[j] != VarState::kFree && finite(lo_[j]) && finite(up_[j])) {
      state_[j] = dj < 0 ? VarState::kAtUpper : VarState::kAtLower;
      x_[j] = dj < 0 ? up_[j] : lo_[j];
    } else {
      cost_[j] -= dj;
      d_[j] = 0.0;
    }
  }
}

// Moves boxed nonbasic columns to the bound their reduced cost prefers.
bool SimplexEngine::make_dual_feasible() {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
    if (d_[j] < -kOptTol) {
      if (!finite(up_[j])) return false;
      state_[j] = VarState::kAtUpper;
      x_[j] = up_[j];
    } else if (d_[j] > kOptTol) {
      if (!finite(lo_[j])) return false;
      state_[j] = VarState::kAtLower;
      x_[j] = lo_[j];
    }
  }
  return true;
}

LpStatus SimplexEngine::primal_loop() {
  const int total = n_ + m_;
  std::vector<double> y(m_);
  std::vector<double> alpha(m_);
  std::vector<double> phase_cost(m_);
  int degenerate_run = 0;
  int recoveries = 0;
  bool bland = false;

  if (!refactor()) {
    reset_to_slack_basis();
  }
  recompute_primal();

  while (true) {
    if (iterations_ >= iteration_limit_) return LpStatus::kIterationLimit;
    if (factor_->num_updates() >= kRefactorInterval) {
      if (!refactor()) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        reset_to_slack_basis();
      }
      recompute_primal();
    }

    // Phase selection: minimize the sum of infeasibilities while any basic
    // variable is outside its bounds.
    bool phase1 = false;
    for (int p = 0; p < m_; ++p) {
      const int j = basis_[p];
      if (x_[j] < lo_[j] - kFeasTol) {
        phase_cost[p] = -1.0;
        phase1 = true;
      } else if (x_[j] > up_[j] + kFeasTol) {
        phase_cost[p] = 1.0;
        phase1 = true;
      } else {
        phase_cost[p] = 0.0;
      }
    }
    for (int p = 0; p < m_; ++p) {
      y[p] = phase1 ? phase_cost[p] : cost_[basis_[p]];
    }
    if (m_ > 0) factor_->btran(y);

    // Pricing.
    int entering = -1;
    int direction = 0;
    double best = 0.0;
    for (int j = 0; j < total; ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || lo_[j] == up_[j]) continue;
      const double cj = phase1 ? 0.0 : cost_[j];
      const double dj = cj - dot_column(j, y);
      int dir = 0;
      if (dj < -kOptTol && (s == VarState::kAtLower || s == VarState::kFree)) {
        dir = 1;
      } else if (dj > kOptTol &&
                 (s == VarState::kAtUpper || s == VarState::kFree)) {
        dir = -1;
      }
      if (dir == 0) continue;
      if (bland) {
        entering = j;
        direction = dir;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        entering = j;
        direction = dir;
      }
    }

    if (entering < 0) {
      if (phase1) {
        // Confirm on a fresh factorization before declaring infeasibility.
        if (factor_->num_updates() > 0 && refactor()) {
          recompute_primal();
          if (max_primal_infeasibility() <= kFeasTol) continue;
          if (++recoveries <= kMaxRecoveries) continue;
        }
        return LpStatus::kInfeasible;
      }
      if (!refactor()) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        reset_to_slack_basis();
        continue;
      }
      recompute_primal();
      if (max_primal_infeasibility() > kFeasTol) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        continue;
      }
      recompute_duals(cost_);
      if (!dual_feasible()) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        continue;
      }
      optimal_ = true;
      return LpStatus::kOptimal;
    }

    column(entering, alpha);
    if (m_ > 0) factor_->ftran(alpha);

    // Harris two-pass ratio test. In phase 1 an infeasible basic variable
    // limits the step where it reaches its violated bound.
    double theta_max = kInf;
    for (int p = 0; p < m_; ++p) {
      if (std::abs(alpha[p]) < kPivotTol) continue;
      const double delta = -direction * alpha[p];
      const int j = basis_[p];
      const double xb = x_[j];
      double relaxed = kInf;
      if (phase1 && xb < lo_[j] - kFeasTol) {
        if (delta > 0) relaxed = (lo_[j] - xb + kFeasTol) / delta;
      } else if (phase1 && xb > up_[j] + kFeasTol) {
        if (delta < 0) relaxed = (xb - up_[j] + kFeasTol) / -delta;
      } else if (delta > 0 && finite(up_[j])) {
        relaxed = (up_[j] + kFeasTol - xb) / delta;
      } else if (delta < 0 && finite(lo_[j])) {
        relaxed = (xb - lo_[j] + kFeasTol) / -delta;
      }
      theta_max = std::min(theta_max, relaxed);
    }

    int leave_pos = -1;
    double theta = kInf;
    VarState leave_state = VarState::kAtLower;
    double best_pivot = 0.0;
    for (int p = 0; p < m_; ++p) {
      if (std::abs(alpha[p]) < kPivotTol) continue;
      const double delta = -direction * alpha[p];
      const int j = basis_[p];
      const double xb = x_[j];
      double ratio = kInf;
      VarState st = VarState::kAtLower;
      if (phase1 && xb < lo_[j] - kFeasTol) {
        if (delta > 0) ratio = (lo_[j] - xb) / delta;
      } else if (phase1 && xb > up_[j] + kFeasTol) {
        if (delta < 0) {
          ratio = (xb - up_[j]) / -delta;
          st = VarState::kAtUpper;
        }
      } else if (delta > 0 && finite(up_[j])) {
        ratio = (up_[j] - xb) / delta;
        st = VarState::kAtUpper;
      } else if (delta < 0 && finite(lo_[j])) {
        ratio = (xb - lo_[j]) / -delta;
      }
      if (ratio > theta_max || !finite(ratio)) continue;
      const bool take =
          bland ? (leave_pos < 0 || ratio < theta ||
                   (ratio == theta && j < basis_[leave_pos]))
                : std::abs(alpha[p]) > best_pivot;
      if (take) {
        best_pivot = std::abs(alpha[p]);
        leave_pos = p;
        theta = std::max(ratio, 0.0);
        leave_state = st;
      }
    }

    const double range = up_[entering] - lo_[entering];
    const bool flip = finite(range) && (leave_pos < 0 || range <= theta);
    if (leave_pos < 0 && !flip) {
      if (phase1) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        refactor();
        recompute_primal();
        continue;
      }
      return LpStatus::kUnbounded;
    }
    if (flip) theta = range;
    dse_valid_ = false;

    ++iterations_;
    if (theta <= 1e-12) {
      if (++degenerate_run > kDegenerateBeforeBland) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    x_[entering] += direction * theta;
    if (theta != 0.0) {
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) x_[basis_[p]] -= direction * alpha[p] * theta;
      }
    }
    if (flip) {
      if (direction > 0) {
        state_[entering] = VarState::kAtUpper;
        x_[entering] = up_[entering];
      } else {
        state_[entering] = VarState::kAtLower;
        x_[entering] = lo_[entering];
      }
      continue;
    }
    pivot(leave_pos, entering, alpha, leave_state);
  }
}

bool SimplexEngine::dual_feasible() const {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
    switch (state_[j]) {
      case VarState::kAtLower:
        if (d_[j] < -kOptTol) return false;
        break;
      case VarState::kAtUpper:
        if (d_[j] > kOptTol) return false;
        break;
      case VarState::kFree:
        if (std::abs(d_[j]) > kOptTol) return false;
        break;
      case VarState::kBasic:
        break;
    }
  }
  return true;
}

LpStatus SimplexEngine::reoptimize() {
  if (!optimal_) return solve();
  optimal_ = false;
  if (!refactor()) {
    reset_to_slack_basis();
    return primal_loop();
  }
  recompute_primal();
  recompute_duals(cost_);
  if (!dual_feasible()) return primal_loop();
  const LpStatus status = perturbed_dual();
  if (status == LpStatus::kIterationLimit ||
      status == LpStatus::kNumericalFailure) {
    return primal_loop();
  }
  return status;
}

LpStatus SimplexEngine::dual_loop() {
  struct Candidate {
    int j;
    double ratio;
    double abs_alpha;
  };
  const int total = n_ + m_;
  std::vector<double> rho(m_), alpha(m_), tau(m_), flip_col(m_);
  std::vector<double> row_alpha(total, 0.0);
  std::vector<char> mark(total, 0);
  std::vector<int> touched;
  std::vector<Candidate> cand;
  std::vector<int> flips;
  int recoveries = 0;
  const std::int64_t start = iterations_;
  const std::int64_t budget = 50LL * (m_ + n_) + 1000;
  if (!dse_valid_ || static_cast<int>(dse_.size()) != m_) {
    dse_.assign(m_, 1.0);
    dse_valid_ = true;
  }

  auto fresh_start = [&]() {
    if (!refactor()) return false;
    recompute_duals(cost_);
    repair_duals();
    recompute_primal();
    return true;
  };

  while (true) {
    if (iterations_ - start > budget) return LpStatus::kIterationLimit;
    if (factor_->num_updates() >= kRefactorInterval && !fresh_start()) {
      return LpStatus::kNumericalFailure;
    }

    // Leaving row: largest squared violation over its steepest edge weight.
    int r = -1;
    double best = 0.0;
    for (int p = 0; p < m_; ++p) {
      const double v = infeasibility(basis_[p]);
      if (v <= kFeasTol) continue;
      const double score = v * v / dse_[p];
      if (score > best) {
        best = score;
        r = p;
      }
    }
    if (r < 0) {
      if (!refactor()) return LpStatus::kNumericalFailure;
      recompute_primal();
      if (max_primal_infeasibility() > kFeasTol) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        continue;
      }
      recompute_duals(cost_);
      if (!dual_feasible()) {
        if (++recoveries > kMaxRecoveries) return LpStatus::kNumericalFailure;
        repair_duals();
        recompute_primal();
        continue;
      }
      optimal_ = true;
      return LpStatus::kOptimal;
    }
    const int leaving = basis_[r];
    const double sigma = x_[leaving] < lo_[leaving] ? 1.0 : -1.0;
    const double target = sigma > 0 ? lo_[leaving] : up_[leaving];

    std::fill(rho.begin(), rho.end(), 0.0);
    rho[r] = 1.0;
    factor_->btran(rho);

    // Pivot row alpha_rj = rho' a_j. Sparse rho: accumulate over the rows
    // where it is nonzero. Dense rho: dot products with the nonbasic columns.
    touched.clear();
    double rho_norm2 = 0.0;
    int rho_nnz = 0;
    for (int i = 0; i < m_; ++i) {
      if (rho[i] == 0.0) continue;
      rho_norm2 += rho[i] * rho[i];
      ++rho_nnz;
    }
    if (rho_nnz * 10 < m_) {
      for (int i = 0; i < m_; ++i) {
        const double ri = rho[i];
        if (ri == 0.0) continue;
        for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
          const int j = row_col_[k];
          if (!mark[j]) {
            mark[j] = 1;
            touched.push_back(j);
          }
          row_alpha[j] += row_value_[k] * ri;
        }
        const int lj = n_ + i;
        mark[lj] = 1;
        touched.push_back(lj);
        row_alpha[lj] = -ri;
      }
    } else {
      for (int j = 0; j < total; ++j) {
        if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
        const double a = dot_column(j, rho);
        if (a == 0.0) continue;
        row_alpha[j] = a;
        mark[j] = 1;
        touched.push_back(j);
      }
    }
    dse_[r] = std::max(rho_norm2, 1e-12);

    cand.clear();
    for (int j : touched) {
      if (state_[j] == VarState::kBasic || lo_[j] == up_[j]) continue;
      const double a = row_alpha[j];
      if (std::abs(a) < kPivotTol) continue;
      const double s = sigma * a;
      double ratio = kInf;
      switch (state_[j]) {
        case VarState::kAtLower:
          if (s < 0) ratio = std::max(d_[j], 0.0) / -s;
          break;
        case VarState::kAtUpper:
          if (s > 0) ratio = std::max(-d_[j], 0.0) / s;
          break;
        case VarState::kFree:
          ratio = std::abs(d_[j]) / std::abs(s);
          break;
        case VarState::kBasic:
          break;
      }
      if (finite(ratio)) cand.push_back({j, ratio, std::abs(a)});
    }
    // Bound flipping: pass boxed breakpoints while the row stays violated.
    // Breakpoints come off a min-heap, so only the passed ones get ordered.
    const auto later = [](const Candidate& x, const Candidate& y) {
      return x.ratio > y.ratio;
    };
    std::make_heap(cand.begin(), cand.end(), later);
    std::size_t heap_end = cand.size();
    double slope = std::abs(x_[leaving] - target);
    flips.clear();
    while (heap_end > 0) {
      const Candidate& top = cand.front();
      const double range = up_[top.j] - lo_[top.j];
      if (!finite(range)) break;
      const double next = slope - top.abs_alpha * range;
      if (next <= 0.0) break;
      slope = next;
      flips.push_back(top.j);
      std::pop_heap(cand.begin(), cand.begin() + heap_end, later);
      --heap_end;
    }
    cand.resize(heap_end);

    // Harris pass over the remaining breakpoints.
    int entering = -1;
    double step = 0.0;
    double bound = kInf;
    for (const Candidate& c : cand) {
      bound = std::min(bound, c.ratio + kOptTol / c.abs_alpha);
    }
    double best_pivot = 0.0;
    for (const Candidate& c : cand) {
      if (c.ratio <= bound && c.abs_alpha > best_pivot) {
        best_pivot = c.abs_alpha;
        entering = c.j;
        step = c.ratio;
      }
    }
    if (entering < 0) {
      for (int j : touched) {
        row_alpha[j] = 0.0;
        mark[j] = 0;
      }
      if (factor_->num_updates() > 0 && ++recoveries <= kMaxRecoveries) {
        if (!fresh_start()) return LpStatus::kNumericalFailure;
        continue;
      }
      return LpStatus::kInfeasible;
    }

    column(entering, alpha);
    factor_->ftran(alpha);
    const double arq = row_alpha[entering];
    if (std::abs(alpha[r] - arq) > 1e-7 * (1.0 + std::abs(arq))) {
      for (int j : touched) {
        row_alpha[j] = 0.0;
        mark[j] = 0;
      }
      if (++recoveries > kMaxRecoveries || !fresh_start()) {
        return LpStatus::kNumericalFailure;
      }
      continue;
    }

    ++iterations_;
    if (!flips.empty()) {
      std::fill(flip_col.begin(), flip_col.end(), 0.0);
      for (int j : flips) {
        double dx;
        if (state_[j] == VarState::kAtLower) {
          dx = up_[j] - lo_[j];
          state_[j] = VarState::kAtUpper;
          x_[j] = up_[j];
        } else {
          dx = lo_[j] - up_[j];
          state_[j] = VarState::kAtLower;
          x_[j] = lo_[j];
        }
        if (j < n_) {
          for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
            flip_col[row_index_[k]] += value_[k] * dx;
          }
        } else {
          flip_col[j - n_] -= dx;
        }
      }
      factor_->ftran(flip_col);
      for (int p = 0; p < m_; ++p) {
        if (flip_col[p] != 0.0) x_[basis_[p]] -= flip_col[p];
      }
    }

    const double delta = (x_[leaving] - target) / alpha[r];
    x_[entering] += delta;
    if (delta != 0.0) {
      for (int p = 0; p < m_; ++p) {
        if (alpha[p] != 0.0) x_[basis_[p]] -= delta * alpha[p];
      }
    }

    // Steepest edge weights: w_i += -2 (a_i/a_r) tau_i + (a_i/a_r)^2 w_r.
    tau = rho;
    factor_->ftran(tau);
    const double wr = dse_[r];
    const double ar = alpha[r];
    for (int p = 0; p < m_; ++p) {
      if (p == r || alpha[p] == 0.0) continue;
      const double q = alpha[p] / ar;
      dse_[p] = std::max(dse_[p] - 2.0 * q * tau[p] + q * q * wr, 1e-12);
    }
    dse_[r] = std::max(wr / (ar * ar), 1e-12);

    for (int j : touched) {
      if (step != 0.0 && state_[j] != VarState::kBasic) {
        d_[j] += sigma * step * row_alpha[j];
      }
      row_alpha[j] = 0.0;
      mark[j] = 0;
    }
    d_[entering] = 0.0;
    d_[leaving] = sigma * step;
    pivot(r, entering, alpha,
          sigma > 0 ? VarState::kAtLower : VarState::kAtUpper);
  }
}

LpSolution SimplexEngine::solution() {
  LpSolution out;
  out.iterations = iterations_;
  if (refactor()) recompute_primal();
  recompute_duals(cost_);
  std::vector<double> y(m_, 0.0);
  for (int p = 0; p < m_; ++p) y[p] = cost_[basis_[p]];
  if (m_ > 0) factor_->btran(y);
  out.x.assign(x_.begin(), x_.begin() + n_);
  out.row_duals = std::move(y);
  out.reduced_costs.assign(d_.begin(), d_.begin() + n_);
  out.objective = objective_value();
  out.basis = basis();
  return out;
}

}  // namespace evagg::lp
