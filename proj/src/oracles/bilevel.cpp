#include <stdexcept>
#include <string>

#include "evagg/oracles.hpp"

namespace evagg::oracles {
namespace {

struct EvColumns {
  std::vector<int> c, d, e, s, cdeg, tau;
};

std::string tag(const char* role, int v, int t) {
  return std::string(role) + "_v" + std::to_string(v) + "_t" + std::to_string(t);
}

// Upper-level LP with the availability profile of every EV fixed.
struct TupleModel {
  lp::LinearModel model;
  std::vector<int> p;
  std::vector<EvColumns> ev;
};

TupleModel build_tuple(const BilevelInstance& in,
                       const std::vector<std::vector<int>>& alpha,
                       const std::vector<std::vector<std::vector<int>>>& admissible) {
  const int n_t = in.horizon.n_periods;
  const double h = in.horizon.period_hours;
  const int n_v = static_cast<int>(in.fleet.size());
  TupleModel tm;
  lp::LinearModel& m = tm.model;
  for (int t = 0; t < n_t; ++t) {
    const int p = m.add_variable("p_t" + std::to_string(t),
                                 -in.params.feeder_cap, in.params.feeder_cap);
    m.set_objective(p, in.prices[t] * h);
    tm.p.push_back(p);
  }
  tm.ev.resize(n_v);
  for (int v = 0; v < n_v; ++v) {
    const EvParams& ev = in.fleet[v];
    EvColumns& col = tm.ev[v];
    const double k = ev.degradation_rate();
    std::vector<lp::Term> tau_sum;
    for (int t = 0; t < n_t; ++t) {
      const int a = alpha[v][t];
      col.c.push_back(m.add_variable(tag("c", v, t), 0.0, ev.c_max));
      col.d.push_back(m.add_variable(tag("d", v, t), 0.0, ev.d_max * a));
      col.e.push_back(m.add_variable(tag("energy", v, t), ev.e_min, ev.e_max));
      col.s.push_back(m.add_variable(tag("s", v, t), 0.0, lp::kInf));
      col.cdeg.push_back(m.add_variable(tag("cdeg", v, t), 0.0, lp::kInf));
      col.tau.push_back(
          m.add_variable(tag("tau", v, t), 0.0, ev.usable() * (1 - a)));
      m.set_objective(col.cdeg[t], 1.0);
      m.set_objective(col.s[t], in.params.pen_balance);
      tau_sum.push_back({col.tau[t], 1.0});

      std::vector<lp::Term> dyn = {{col.e[t], 1.0},
                                   {col.c[t], -ev.eta * h * a},
                                   {col.d[t], h / ev.eta},
                                   {col.tau[t], 1.0},
                                   {col.s[t], -1.0}};
      double rhs = 0.0;
      if (t == 0) {
        rhs = ev.e_init;
      } else {
        dyn.push_back({col.e[t - 1], -1.0});
      }
      m.add_constraint(tag("dyn", v, t), std::move(dyn), lp::Sense::kEqual, rhs);
      m.add_constraint(tag("deg", v, t),
                       {{col.cdeg[t], 1.0},
                        {col.d[t], -k * h / ev.eta},
                        {col.tau[t], -k}},
                       lp::Sense::kEqual, 0.0);
    }
    m.add_constraint("terminal_v" + std::to_string(v), {{col.e[n_t - 1], 1.0}},
                     lp::Sense::kEqual, ev.e_init);
    m.add_constraint("demand_v" + std::to_string(v), std::move(tau_sum),
                     lp::Sense::kEqual, ev.daily_demand);

    // Every admissible profile must leave at least the expected demand of
    // net charge; the chosen profile must be a cheapest interaction.
    for (std::size_t q = 0; q < admissible[v].size(); ++q) {
      const auto& other = admissible[v][q];
      std::vector<lp::Term> drain;
      std::vector<lp::Term> inter;
      for (int t = 0; t < n_t; ++t) {
        if (other[t]) {
          drain.push_back({col.c[t], ev.eta * h});
          drain.push_back({col.d[t], -h / ev.eta});
        }
        const int diff = alpha[v][t] - other[t];
        if (diff != 0) {
          inter.push_back({col.c[t], diff * ev.eta * h});
          inter.push_back({col.d[t], diff * h / ev.eta});
        }
      }
      const std::string suffix =
          "_v" + std::to_string(v) + "_q" + std::to_string(q);
      m.add_constraint("drain" + suffix, std::move(drain),
                       lp::Sense::kGreaterEqual, ev.daily_demand);
      if (!inter.empty()) {
        m.add_constraint("inter" + suffix, std::move(inter),
                         lp::Sense::kLessEqual, 0.0);
      }
    }
  }
  for (int t = 0; t < n_t; ++t) {
    std::vector<lp::Term> bal = {{tm.p[t], 1.0}};
    for (int v = 0; v < n_v; ++v) {
      bal.push_back({tm.ev[v].c[t], -1.0});
      bal.push_back({tm.ev[v].d[t], 1.0});
    }
    m.add_constraint("balance_t" + std::to_string(t), std::move(bal),
                     lp::Sense::kEqual, 0.0);
  }
  return tm;
}

}  // namespace

BilevelSolution enumerate_bilevel(const BilevelInstance& in) {
  const int n_v = static_cast<int>(in.fleet.size());
  const int n_t = in.horizon.n_periods;
  if (n_v > kMaxBilevelEvs || n_t > kMaxBilevelPeriods) {
    throw std::length_error("bilevel enumeration is limited to " +
                            std::to_string(kMaxBilevelEvs) + " EVs and " +
                            std::to_string(kMaxBilevelPeriods) + " periods");
  }
  if (n_v < 1 || static_cast<int>(in.sets.size()) != n_v ||
      static_cast<int>(in.prices.size()) != n_t) {
    throw std::invalid_argument("bilevel instance sizes do not match");
  }
  std::vector<std::vector<std::vector<int>>> admissible(n_v);
  for (int v = 0; v < n_v; ++v) {
    admissible[v] =
        feasible_profiles(in.sets[v].a_lo, in.sets[v].a_hi, in.sets[v].k_min);
    if (admissible[v].empty()) {
      throw std::invalid_argument("EV " + std::to_string(v) +
                                  " has no admissible availability profile");
    }
  }

  BilevelSolution best;
  std::vector<std::size_t> pick(n_v, 0);
  while (true) {
    std::vector<std::vector<int>> alpha(n_v);
    for (int v = 0; v < n_v; ++v) alpha[v] = admissible[v][pick[v]];
    ++best.tuples;

    TupleModel tm = build_tuple(in, alpha, admissible);
    const lp::LpSolution sol = lp::solve_lp(tm.model);
    ++best.lps_solved;
    if (sol.status == lp::LpStatus::kOptimal &&
        (!best.feasible || sol.objective < best.objective - 1e-12)) {
      best.feasible = true;
      best.objective = sol.objective;
      best.alpha = alpha;
      best.p.assign(n_t, 0.0);
      for (int t = 0; t < n_t; ++t) best.p[t] = sol.x[tm.p[t]];
      best.c.assign(n_v, std::vector<double>(n_t));
      best.d = best.c;
      best.tau = best.c;
      for (int v = 0; v < n_v; ++v) {
        for (int t = 0; t < n_t; ++t) {
          best.c[v][t] = sol.x[tm.ev[v].c[t]];
          best.d[v][t] = sol.x[tm.ev[v].d[t]];
          best.tau[v][t] = sol.x[tm.ev[v].tau[t]];
        }
      }
    }

    int v = 0;
    while (v < n_v && ++pick[v] == admissible[v].size()) {
      pick[v] = 0;
      ++v;
    }
    if (v == n_v) break;
  }

  if (best.feasible) {
    const double h = in.horizon.period_hours;
    for (int v = 0; v < n_v; ++v) {
      const EvParams& ev = in.fleet[v];
      const auto drain = solve_lower_A(
          drain_instance(ev, best.c[v], best.d[v], in.sets[v], h));
      best.drain_margin.push_back(drain.objective - ev.daily_demand);
      const LowerLevelInstance inter =
          interaction_instance(ev, best.c[v], best.d[v], in.sets[v], h);
      double chosen = 0.0;
      for (int t = 0; t < n_t; ++t) chosen += best.alpha[v][t] * inter.w[t];
      best.interaction_gap.push_back(chosen - solve_lower_B(inter).objective);
    }
  }
  return best;
}

}  // namespace evagg::oracles
