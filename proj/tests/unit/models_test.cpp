#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evagg/milp.hpp"
#include "evagg/models.hpp"
#include "evagg/oracles.hpp"
#include "support/fixtures.hpp"

namespace evagg::models {
namespace {

Horizon hours(int n) {
  Horizon h;
  h.n_periods = n;
  return h;
}

std::vector<std::vector<double>> filled(int n_v, int n_t, double x) {
  return std::vector<std::vector<double>>(n_v, std::vector<double>(n_t, x));
}

lp::LpSolution solve_ok(const ModelArtifacts& art) {
  lp::LpSolution s = lp::solve_lp(art.model);
  EXPECT_EQ(s.status, lp::LpStatus::kOptimal);
  if (s.status == lp::LpStatus::kOptimal) {
    EXPECT_TRUE(lp::check_duality(art.model, s).certified());
  }
  return s;
}

TEST(Deterministic, FlatPricesStayIdle) {
  const Horizon h = hours(6);
  FleetSpec fleet(1);
  const auto art = build_deterministic(fleet, std::vector<double>(6, 0.2),
                                       filled(1, 6, 1.0), filled(1, 6, 0.0),
                                       AggregatorParams{}, h);
  const auto s = solve_ok(art);
  EXPECT_NEAR(s.objective, 0.0, 1e-9);
  const auto sol = decode(art, s.x, fleet, AggregatorParams{});
  for (double p : sol.p) EXPECT_NEAR(p, 0.0, 1e-9);
  EXPECT_TRUE(sol.duals.empty());
  EXPECT_TRUE(sol.evs[0].alpha.empty());
}

TEST(Deterministic, SpreadArbitrageAtTheFloor) {
  // A 30x spread beats the round-trip loss: charge flat out in the cheap
  // hour, return everything in the dear one.
  const Horizon h = hours(2);
  FleetSpec fleet(1);
  fleet[0].e_init = fleet[0].e_min;
  const auto art = build_deterministic(fleet, {0.01, 0.30}, filled(1, 2, 1.0),
                                       filled(1, 2, 0.0), AggregatorParams{}, h);
  const auto s = solve_ok(art);
  const auto sol = decode(art, s.x, fleet, AggregatorParams{});
  const EvParams& ev = fleet[0];
  const double stored = ev.eta * ev.c_max;
  const double back = stored * ev.eta;
  EXPECT_NEAR(sol.evs[0].c[0], ev.c_max, 1e-9);
  EXPECT_NEAR(sol.evs[0].d[1], back, 1e-9);
  EXPECT_NEAR(sol.evs[0].e[0], ev.e_min + stored, 1e-9);
  EXPECT_NEAR(sol.objective,
              0.01 * ev.c_max - 0.30 * back + ev.degradation_rate() * stored,
              1e-9);
  EXPECT_LE(max_simultaneous(sol), 1e-9);
}

TEST(Deterministic, ModelSize) {
  const Horizon h;
  FleetSpec fleet(100);
  const auto art = build_deterministic(fleet, std::vector<double>(24, 0.1),
                                       filled(100, 24, 1.0),
                                       filled(100, 24, 0.0), AggregatorParams{}, h);
  EXPECT_EQ(art.model.num_variables(), 6 * 100 * 24 + 24);
  EXPECT_EQ(art.vars.size(), 6u * 100 * 24 + 24);
  EXPECT_EQ(art.rows(tags::kBatteryDynamics).size(), 2400u);
  EXPECT_EQ(art.row_tag.size(),
            static_cast<std::size_t>(art.model.num_constraints()));
  EXPECT_EQ(art.model.constraint(art.rows(tags::kBatteryDynamics)[0]).name,
            "battery_dynamics_v0_t0");
}

TEST(Deterministic, RejectsBadInputs) {
  FleetSpec fleet(1);
  const Horizon h = hours(2);
  EXPECT_THROW(build_deterministic(fleet, {0.1, -0.1}, filled(1, 2, 1.0),
                                   filled(1, 2, 0.0), {}, h),
               std::invalid_argument);
  EXPECT_THROW(build_deterministic(fleet, {0.1, 0.1}, filled(1, 2, 1.5),
                                   filled(1, 2, 0.0), {}, h),
               std::invalid_argument);
  EXPECT_THROW(build_deterministic(fleet, {0.1, 0.1}, filled(1, 3, 1.0),
                                   filled(1, 3, 0.0), {}, h),
               std::invalid_argument);
}

TEST(Deterministic, EveryColumnIsUsed) {
  std::mt19937_64 rng(3);
  const auto cc = testing::random_collapse_case(rng, 2, 5);
  const auto art = build_deterministic(cc.fleet, cc.prices, cc.alpha, cc.tau,
                                       cc.params, cc.horizon);
  std::vector<int> used(art.model.num_variables(), 0);
  for (int i = 0; i < art.model.num_constraints(); ++i) {
    for (const auto& term : art.model.constraint(i).terms) used[term.var] = 1;
  }
  for (int j = 0; j < art.model.num_variables(); ++j) {
    EXPECT_TRUE(used[j] || art.model.objective()[j] != 0.0) << j;
  }
}

TEST(Stochastic, CollapsesToDeterministic) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const auto cc = testing::random_collapse_case(rng, 2, 6);
    const auto det = solve_ok(build_deterministic(cc.fleet, cc.prices, cc.alpha,
                                                  cc.tau, cc.params, cc.horizon));
    ScenarioSet one{{1.0}, {cc.days}};
    const auto s1 = solve_ok(
        build_stochastic(cc.fleet, cc.prices, one, cc.params, cc.horizon));
    EXPECT_NEAR(s1.objective, det.objective, 1e-6);
    ScenarioSet two{{0.5, 0.5}, {cc.days, cc.days}};
    const auto s2 = solve_ok(
        build_stochastic(cc.fleet, cc.prices, two, cc.params, cc.horizon));
    EXPECT_NEAR(s2.objective, det.objective, 1e-6);
  }
}

TEST(Stochastic, BalanceHoldsInEveryScenario) {
  FleetSpec fleet(2);
  const Horizon h = hours(4);
  DayRecord home{{1, 1, 1, 1}, {0, 0, 0, 0}};
  DayRecord away = home;
  away.avail[2] = 0;
  away.cons[2] = 6.0;
  ScenarioSet sc{{0.5, 0.5}, {{home, home}, {home, away}}};
  const auto art = build_stochastic(fleet, {0.1, 0.2, 0.3, 0.1}, sc, {}, h);
  const auto s = solve_ok(art);
  const auto sol = decode(art, s.x, fleet, {});
  ASSERT_EQ(sol.scenarios.size(), 2u);
  for (const auto& w : sol.scenarios) {
    for (int t = 0; t < 4; ++t) {
      double net = 0.0;
      for (const auto& ev : w) net += ev.c[t] - ev.d[t];
      EXPECT_LE(net, sol.p[t] + 1e-7);
    }
  }
  EXPECT_LE(max_simultaneous(sol), 1e-6);
  EXPECT_THROW(build_stochastic(fleet, {0.1, 0.2, 0.3, 0.1},
                                ScenarioSet{{0.7, 0.7}, {{home, home}, {home, away}}},
                                {}, h),
               std::invalid_argument);
}

TEST(Robust, CollapsesToDeterministic) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const auto cc = testing::random_collapse_case(rng, 1 + rep % 2, 6);
    const auto det = solve_ok(build_deterministic(cc.fleet, cc.prices, cc.alpha,
                                                  cc.tau, cc.params, cc.horizon));
    const auto art =
        build_robust_milp(cc.fleet, cc.prices, cc.sets, cc.params, cc.horizon);
    const auto rob = milp::solve_milp(art.model);
    ASSERT_EQ(rob.status, milp::MilpStatus::kOptimal);
    EXPECT_NEAR(rob.objective, det.objective, 1e-6);
    const auto sol = decode(art, rob.x, cc.fleet, cc.params);
    EXPECT_TRUE(audit_robust(sol, cc.fleet, cc.sets, cc.horizon).passed());
  }
}

TEST(Robust, IdleWithoutDemand) {
  FleetSpec fleet(1);
  const Horizon h = hours(4);
  const std::vector<UncertaintySet> sets = {{2, {0, 1, 0, 0}, {1, 1, 1, 0}}};
  const auto art = build_robust_milp(fleet, std::vector<double>(4, 0.1), sets,
                                     {}, h);
  const auto s = milp::solve_milp(art.model);
  ASSERT_EQ(s.status, milp::MilpStatus::kOptimal);
  EXPECT_NEAR(s.objective, 0.0, 1e-9);
  const auto sol = decode(art, s.x, fleet, {});
  int count = 0;
  for (int t = 0; t < 4; ++t) {
    EXPECT_NEAR(sol.evs[0].zc[t], 0.0, 1e-9);
    EXPECT_NEAR(sol.evs[0].zd[t], 0.0, 1e-9);
    count += sol.evs[0].alpha[t];
  }
  EXPECT_GE(count, 2);
  EXPECT_EQ(sol.evs[0].alpha[1], 1);
  EXPECT_EQ(sol.evs[0].alpha[3], 0);
}

TEST(Robust, MatchesEnumeratorAndAudits) {
  std::mt19937_64 rng(21);
  int compared = 0;
  for (int rep = 0; rep < 6; ++rep) {
    const auto rc = testing::random_robust_case(rng, 1 + rep % 2, 4);
    oracles::BilevelInstance in{rc.horizon, rc.fleet, rc.sets, rc.prices,
                                rc.params};
    const auto exact = oracles::enumerate_bilevel(in);
    const auto art =
        build_robust_milp(rc.fleet, rc.prices, rc.sets, rc.params, rc.horizon);
    const auto s = milp::solve_milp(art.model);
    if (!exact.feasible) {
      EXPECT_EQ(s.status, milp::MilpStatus::kInfeasible);
      continue;
    }
    ASSERT_EQ(s.status, milp::MilpStatus::kOptimal);
    EXPECT_NEAR(s.objective, exact.objective, 1e-6);
    const auto sol = decode(art, s.x, rc.fleet, rc.params);
    const auto audit = audit_robust(sol, rc.fleet, rc.sets, rc.horizon);
    EXPECT_TRUE(audit.passed())
        << audit.worst_drain_margin << " " << audit.strong_duality_residual
        << " " << audit.linearization_residual << " " << audit.simultaneous;
    ++compared;
  }
  EXPECT_GT(compared, 0);
}

TEST(Robust, DiagnosesUnplaceableDemand) {
  FleetSpec fleet(1);
  fleet[0].daily_demand = 50.0;  // more than one period away can hold
  const Horizon h = hours(3);
  const std::vector<UncertaintySet> sets = {{2, {1, 1, 0}, {1, 1, 1}}};
  EXPECT_FALSE(robust_diagnostics(fleet, sets, h).empty());
  EXPECT_THROW(build_robust_milp(fleet, {0.1, 0.1, 0.1}, sets, {}, h),
               std::invalid_argument);
  const std::vector<UncertaintySet> bad = {{3, {1, 1, 0}, {1, 1, 0}}};
  EXPECT_FALSE(robust_diagnostics(fleet, bad, h).empty());
}

TEST(Robust, TagsAndBinaries) {
  std::mt19937_64 rng(2);
  const auto rc = testing::random_robust_case(rng, 2, 3);
  const auto art =
      build_robust_milp(rc.fleet, rc.prices, rc.sets, rc.params, rc.horizon);
  EXPECT_EQ(art.rows(tags::kStrongDuality).size(), 2u);
  EXPECT_EQ(art.rows(tags::kMcCormickChargeEnvelope).size(), 6u);
  EXPECT_EQ(art.rows(tags::kPowerBalance).size(), 3u);
  int binaries = 0;
  for (int j = 0; j < art.model.num_variables(); ++j) {
    binaries += art.model.variable(j).is_integer;
  }
  EXPECT_EQ(binaries, 6);
  for (std::size_t i = 0; i < art.row_tag.size(); ++i) {
    EXPECT_FALSE(art.row_tag[i].empty());
  }
}

// Ex-post evaluation examples.
TEST(Feasibility, PerfectForesightCostsNothing) {
  std::mt19937_64 rng(4);
  const auto cc = testing::random_collapse_case(rng, 2, 6);
  const auto det = build_deterministic(cc.fleet, cc.prices, cc.alpha, cc.tau,
                                       cc.params, cc.horizon);
  const auto s = solve_ok(det);
  const auto plan = decode(det, s.x, cc.fleet, cc.params);
  const auto art = build_feasibility(cc.fleet, cc.days, plan.p, cc.params,
                                     cc.horizon);
  const auto f = solve_ok(art);
  const auto out = read_feasibility(art, f.x);
  EXPECT_NEAR(out.objective, 0.0, 1e-7);
  EXPECT_NEAR(out.slack_kwh, 0.0, 1e-7);
  EXPECT_NEAR(out.unmet_sale_kwh, 0.0, 1e-7);
}

TEST(Feasibility, AbsentEvNeedsSlack) {
  FleetSpec fleet(1);
  const Horizon h = hours(24);
  DayRecord away{std::vector<int>(24, 0), std::vector<double>(24, 0.0)};
  away.cons[8] = 6.0;
  away.cons[17] = 4.0;
  const AggregatorParams params;
  const auto art = build_feasibility(fleet, {away}, std::vector<double>(24, 0.0),
                                     params, h);
  const auto f = solve_ok(art);
  const auto out = read_feasibility(art, f.x);
  EXPECT_NEAR(out.slack_kwh, 10.0, 1e-9);
  EXPECT_NEAR(out.objective, 10.0 * params.pen_balance, 1e-6);
}

TEST(Feasibility, UndeliveredSale) {
  FleetSpec fleet(1);
  const Horizon h = hours(4);
  DayRecord away{{0, 0, 0, 0}, {0, 0, 0, 0}};
  const AggregatorParams params;
  const auto art =
      build_feasibility(fleet, {away}, {0.0, -5.0, 0.0, 0.0}, params, h);
  EXPECT_EQ(art.find(Role::kUnmetSale, -1, 0, -1), -1);
  const auto f = solve_ok(art);
  EXPECT_NEAR(f.x[art.var(Role::kUnmetSale, -1, 1, -1)], 5.0, 1e-9);
  const auto out = read_feasibility(art, f.x);
  EXPECT_NEAR(out.unmet_sale_kwh, 5.0, 1e-9);
  EXPECT_NEAR(out.objective, 5.0 * params.pen_sale, 1e-6);
}

TEST(Decode, NamesTheViolatedTag) {
  FleetSpec fleet(1);
  const Horizon h = hours(2);
  const auto art = build_deterministic(fleet, {0.1, 0.2}, filled(1, 2, 1.0),
                                       filled(1, 2, 0.0), {}, h);
  auto x = solve_ok(art).x;
  x[art.var(Role::kEnergy, 0, 1)] += 1.0;
  try {
    decode(art, x, fleet, {});
    FAIL() << "expected a violation";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("terminal_energy"), std::string::npos);
  }
  x = solve_ok(art).x;
  x[art.var(Role::kCharge, 0, 0)] = 1.0;
  EXPECT_THROW(decode(art, x, fleet, {}), std::runtime_error);
}

TEST(Models, EnergyTelescopes) {
  std::mt19937_64 rng(9);
  const auto cc = testing::random_collapse_case(rng, 2, 6);
  const auto art = build_deterministic(cc.fleet, cc.prices, cc.alpha, cc.tau,
                                       cc.params, cc.horizon);
  const auto sol = decode(art, solve_ok(art).x, cc.fleet, cc.params);
  for (int v = 0; v < 2; ++v) {
    const EvParams& ev = cc.fleet[v];
    double net = 0.0;
    for (int t = 0; t < 6; ++t) {
      net += ev.eta * sol.evs[v].c[t] * cc.alpha[v][t] -
             sol.evs[v].d[t] / ev.eta - cc.tau[v][t] + sol.evs[v].s[t];
    }
    EXPECT_NEAR(net, 0.0, 1e-7);
  }
}

}  // namespace
}  // namespace evagg::models
