#pragma once

// Seeded instance generators shared by the unit and acceptance suites.

#include <cmath>
#include <random>
#include <vector>

#include "evagg/domain.hpp"
#include "evagg/estimation.hpp"
#include "evagg/models.hpp"

namespace evagg::testing {

struct RobustCase {
  Horizon horizon;
  FleetSpec fleet;
  std::vector<UncertaintySet> sets;
  std::vector<double> prices;
  AggregatorParams params;
};

inline EvParams small_ev(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> power(3.0, 7.4);
  std::uniform_real_distribution<double> cap(12.0, 30.0);
  EvParams ev;
  ev.c_max = power(rng);
  ev.d_max = power(rng);
  ev.e_min = 4.0;
  ev.e_max = ev.e_min + cap(rng);
  ev.e_init = default_e_init(ev);
  return ev;
}

inline std::vector<double> random_prices(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> price(0.03, 0.35);
  std::vector<double> out(n);
  for (double& p : out) p = price(rng);
  return out;
}

// Random uncertainty sets with up to n_t periods; redrawn until the robust
// model passes its build-time diagnostics.
inline RobustCase random_robust_case(std::mt19937_64& rng, int n_evs,
                                     int n_t) {
  std::uniform_int_distribution<int> kind(0, 19);
  std::uniform_real_distribution<double> demand(0.0, 12.0);
  std::bernoulli_distribution tight(0.3);
  while (true) {
    RobustCase rc;
    rc.horizon.n_periods = n_t;
    rc.prices = random_prices(rng, n_t);
    if (n_evs > 1 && tight(rng)) rc.params.feeder_cap = 8.0;
    for (int v = 0; v < n_evs; ++v) {
      EvParams ev = small_ev(rng);
      ev.daily_demand = std::round(demand(rng) * 4.0) / 4.0;
      UncertaintySet u;
      for (int t = 0; t < n_t; ++t) {
        const int k = kind(rng);
        u.a_lo.push_back(k < 7);    // known available
        u.a_hi.push_back(k < 15);   // else known away
      }
      u.k_min = std::uniform_int_distribution<int>(u.sum_lo(), u.sum_hi())(rng);
      rc.fleet.push_back(ev);
      rc.sets.push_back(u);
    }
    if (models::robust_diagnostics(rc.fleet, rc.sets, rc.horizon).empty()) {
      return rc;
    }
  }
}

// Fleet with a known availability profile and at most one driving period
// carrying the whole demand, so transport placement is not a choice.
struct CollapseCase {
  Horizon horizon;
  FleetSpec fleet;
  std::vector<UncertaintySet> sets;
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<double>> tau;
  std::vector<DayRecord> days;
  std::vector<double> prices;
  AggregatorParams params;
};

inline CollapseCase random_collapse_case(std::mt19937_64& rng, int n_evs,
                                         int n_t) {
  std::uniform_real_distribution<double> demand(0.0, 10.0);
  std::uniform_int_distribution<int> hour(0, n_t - 1);
  std::bernoulli_distribution drives(0.7);
  CollapseCase cc;
  cc.horizon.n_periods = n_t;
  cc.prices = random_prices(rng, n_t);
  for (int v = 0; v < n_evs; ++v) {
    EvParams ev = small_ev(rng);
    DayRecord r;
    r.avail.assign(n_t, 1);
    r.cons.assign(n_t, 0.0);
    if (drives(rng)) {
      const int t = hour(rng);
      r.avail[t] = 0;
      r.cons[t] = std::round(demand(rng) * 4.0) / 4.0;
    }
    double total = 0.0;
    for (double c : r.cons) total += c;
    ev.daily_demand = total;
    UncertaintySet u;
    u.a_lo = r.avail;
    u.a_hi = r.avail;
    u.k_min = u.sum_lo();
    cc.fleet.push_back(ev);
    cc.sets.push_back(u);
    cc.alpha.emplace_back(r.avail.begin(), r.avail.end());
    cc.tau.push_back(r.cons);
    cc.days.push_back(r);
  }
  return cc;
}

}  // namespace evagg::testing
