#pragma once

#include <cstdint>
#include <vector>

#include "evagg/domain.hpp"
#include "evagg/lp_core.hpp"

namespace evagg::oracles {

// min sum_t w_t a_t  s.t.  sum_t a_t >= k_min,  a_lo <= a <= a_hi, a binary.
struct LowerLevelInstance {
  std::vector<double> w;
  int k_min = 0;
  std::vector<int> a_lo;
  std::vector<int> a_hi;

  int size() const { return static_cast<int>(w.size()); }
};

struct LowerLevelSolution {
  std::vector<int> alpha;
  double objective = 0.0;  // kWh
};

// Throws std::invalid_argument on mismatched sizes, non-binary or crossed
// bounds, or sum(a_hi) < k_min.
void validate(const LowerLevelInstance& inst);

// Worst-case draining profile. Start from a_lo, switch on every free hour
// with a negative weight, then the cheapest remaining free hours (lowest
// index first on ties) until k_min is met.
LowerLevelSolution solve_lower_A(const LowerLevelInstance& inst);
// Worst-case interaction profile; requires w >= 0.
LowerLevelSolution solve_lower_B(const LowerLevelInstance& inst);
// Minimum over every feasible binary profile; T <= 20.
LowerLevelSolution solve_lower_exhaustive(const LowerLevelInstance& inst);

// All binary profiles within the bounds meeting the count, in increasing
// order of their bit pattern over the free hours. Throws std::length_error
// beyond 20 free hours.
std::vector<std::vector<int>> feasible_profiles(const std::vector<int>& a_lo,
                                                const std::vector<int>& a_hi,
                                                int k_min);

// The relaxation with a in [a_lo, a_hi] as column bounds and one count row.
lp::LinearModel lower_level_relaxation(const LowerLevelInstance& inst);

// Weights of the two lower levels for a given charging schedule:
// draining w = eta c h - d h / eta, interaction w = eta c h + d h / eta.
LowerLevelInstance drain_instance(const EvParams& ev,
                                  const std::vector<double>& c,
                                  const std::vector<double>& d,
                                  const UncertaintySet& set,
                                  double period_hours = 1.0);
LowerLevelInstance interaction_instance(const EvParams& ev,
                                        const std::vector<double>& c,
                                        const std::vector<double>& d,
                                        const UncertaintySet& set,
                                        double period_hours = 1.0);

inline constexpr int kMaxBilevelEvs = 2;
inline constexpr int kMaxBilevelPeriods = 6;

struct BilevelInstance {
  Horizon horizon;
  FleetSpec fleet;  // daily_demand carries the expected transport energy
  std::vector<UncertaintySet> sets;
  std::vector<double> prices;
  AggregatorParams params;
};

struct BilevelSolution {
  bool feasible = false;
  double objective = lp::kInf;
  std::vector<double> p;
  std::vector<std::vector<int>> alpha;
  std::vector<std::vector<double>> c, d, tau;
  // Greedy re-check of the winning schedule: worst-case draining minus
  // demand, and the gap between the chosen profile's interaction and the
  // greedy minimum.
  std::vector<double> drain_margin;
  std::vector<double> interaction_gap;
  std::int64_t tuples = 0;
  std::int64_t lps_solved = 0;
};

// Exact optimum of the robust problem by enumeration. For every tuple of
// per-EV availability profiles the upper-level LP is solved with the
// draining requirement written as one row per admissible profile and the
// interaction optimality of the chosen profile written as one row per
// competing profile; the best tuple wins. Throws std::length_error beyond
// kMaxBilevelEvs EVs or kMaxBilevelPeriods periods.
BilevelSolution enumerate_bilevel(const BilevelInstance& inst);

}  // namespace evagg::oracles
