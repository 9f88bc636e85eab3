#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>
#include <string>

#include "evagg/oracles.hpp"

namespace evagg::oracles {
namespace {

constexpr int kMaxFreeHours = 20;

double weighted_sum(const std::vector<int>& alpha, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (alpha[t]) s += w[t];
  }
  return s;
}

LowerLevelSolution greedy(const LowerLevelInstance& inst) {
  validate(inst);
  const int n = inst.size();
  LowerLevelSolution out;
  out.alpha = inst.a_lo;
  int count = std::accumulate(out.alpha.begin(), out.alpha.end(), 0);
  std::vector<int> idle;
  for (int t = 0; t < n; ++t) {
    if (inst.a_lo[t] == 1 || inst.a_hi[t] == 0) continue;
    if (inst.w[t] < 0.0) {
      out.alpha[t] = 1;
      ++count;
    } else {
      idle.push_back(t);
    }
  }
  if (count < inst.k_min) {
    std::stable_sort(idle.begin(), idle.end(),
                     [&](int a, int b) { return inst.w[a] < inst.w[b]; });
    for (int t : idle) {
      if (count >= inst.k_min) break;
      out.alpha[t] = 1;
      ++count;
    }
  }
  out.objective = weighted_sum(out.alpha, inst.w);
  return out;
}

std::vector<int> free_hours(const std::vector<int>& a_lo,
                            const std::vector<int>& a_hi) {
  std::vector<int> out;
  for (std::size_t t = 0; t < a_lo.size(); ++t) {
    if (a_lo[t] == 0 && a_hi[t] == 1) out.push_back(static_cast<int>(t));
  }
  return out;
}

}  // namespace

void validate(const LowerLevelInstance& inst) {
  const auto n = inst.w.size();
  if (inst.a_lo.size() != n || inst.a_hi.size() != n) {
    throw std::invalid_argument("lower level: bound vectors differ in length");
  }
  int hi = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const int lo = inst.a_lo[t];
    const int up = inst.a_hi[t];
    if ((lo != 0 && lo != 1) || (up != 0 && up != 1) || lo > up) {
      throw std::invalid_argument("lower level: bad bounds at period " +
                                  std::to_string(t));
    }
    hi += up;
  }
  if (inst.k_min < 0) throw std::invalid_argument("lower level: negative k_min");
  if (hi < inst.k_min) {
    throw std::invalid_argument("lower level: infeasible, sum(a_hi) < k_min");
  }
}

LowerLevelSolution solve_lower_A(const LowerLevelInstance& inst) {
  return greedy(inst);
}

LowerLevelSolution solve_lower_B(const LowerLevelInstance& inst) {
  for (double w : inst.w) {
    if (w < 0.0) {
      throw std::invalid_argument("interaction weights must be nonnegative");
    }
  }
  return greedy(inst);
}

std::vector<std::vector<int>> feasible_profiles(const std::vector<int>& a_lo,
                                                const std::vector<int>& a_hi,
                                                int k_min) {
  const std::vector<int> free = free_hours(a_lo, a_hi);
  if (static_cast<int>(free.size()) > kMaxFreeHours) {
    throw std::length_error("too many uncertain hours to enumerate");
  }
  const int base = std::accumulate(a_lo.begin(), a_lo.end(), 0);
  std::vector<std::vector<int>> out;
  const std::uint32_t masks = 1u << free.size();
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    if (base + std::popcount(mask) < k_min) continue;
    std::vector<int> a = a_lo;
    for (std::size_t k = 0; k < free.size(); ++k) {
      if (mask >> k & 1u) a[free[k]] = 1;
    }
    out.push_back(std::move(a));
  }
  return out;
}

LowerLevelSolution solve_lower_exhaustive(const LowerLevelInstance& inst) {
  validate(inst);
  LowerLevelSolution best;
  bool found = false;
  for (auto& a : feasible_profiles(inst.a_lo, inst.a_hi, inst.k_min)) {
    const double v = weighted_sum(a, inst.w);
    if (!found || v < best.objective) {
      best.objective = v;
      best.alpha = std::move(a);
      found = true;
    }
  }
  return best;
}

lp::LinearModel lower_level_relaxation(const LowerLevelInstance& inst) {
  validate(inst);
  lp::LinearModel m;
  std::vector<lp::Term> count;
  for (int t = 0; t < inst.size(); ++t) {
    const int a = m.add_variable("a_t" + std::to_string(t), inst.a_lo[t],
                                 inst.a_hi[t]);
    m.set_objective(a, inst.w[t]);
    count.push_back({a, 1.0});
  }
  m.add_constraint("availability_count", std::move(count),
                   lp::Sense::kGreaterEqual, inst.k_min);
  return m;
}

namespace {

LowerLevelInstance weighted(const EvParams& ev, const std::vector<double>& c,
                            const std::vector<double>& d,
                            const UncertaintySet& set, double h, double sign) {
  if (c.size() != d.size() || c.size() != set.a_lo.size()) {
    throw std::invalid_argument("schedule and uncertainty set differ in length");
  }
  LowerLevelInstance inst;
  inst.k_min = set.k_min;
  inst.a_lo = set.a_lo;
  inst.a_hi = set.a_hi;
  inst.w.resize(c.size());
  for (std::size_t t = 0; t < c.size(); ++t) {
    inst.w[t] = ev.eta * c[t] * h + sign * d[t] * h / ev.eta;
  }
  return inst;
}

}  // namespace

LowerLevelInstance drain_instance(const EvParams& ev,
                                  const std::vector<double>& c,
                                  const std::vector<double>& d,
                                  const UncertaintySet& set,
                                  double period_hours) {
  return weighted(ev, c, d, set, period_hours, -1.0);
}

LowerLevelInstance interaction_instance(const EvParams& ev,
                                        const std::vector<double>& c,
                                        const std::vector<double>& d,
                                        const UncertaintySet& set,
                                        double period_hours) {
  LowerLevelInstance inst = weighted(ev, c, d, set, period_hours, 1.0);
  // Solver noise can leave -1e-17 on an idle hour.
  for (double& w : inst.w) w = std::max(w, 0.0);
  return inst;
}

}  // namespace evagg::oracles
