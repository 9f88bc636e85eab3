#include <gtest/gtest.h>

#include <random>

#include "evagg/domain.hpp"
#include "evagg/estimation.hpp"

namespace evagg {
namespace {

bool mentions(const std::vector<std::string>& diag, const std::string& what) {
  for (const auto& s : diag) {
    if (s.find(what) != std::string::npos) return true;
  }
  return false;
}

TEST(Domain, DegradationCost) {
  EvParams ev;
  EXPECT_DOUBLE_EQ(degradation_cost(ev, 0.0, 0.0), 0.0);
  EXPECT_NEAR(degradation_cost(ev, 9.5, 0.0), 0.109375, 1e-12);
  EXPECT_NEAR(degradation_cost(ev, 0.0, 8.0), 0.0875, 1e-12);
  EXPECT_NEAR(ev.degradation_rate(), 0.0109375, 1e-15);
  EXPECT_THROW(degradation_cost(ev, -1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(degradation_cost(ev, 0.0, -1.0), std::invalid_argument);
}

TEST(Domain, FleetValidation) {
  const Horizon h;
  EvParams ok;
  EXPECT_TRUE(validate_fleet({ok}, h).empty());

  EvParams low = ok;
  low.e_init = 5.0;
  EXPECT_TRUE(mentions(validate_fleet({low}, h), "e_init below e_min"));

  EvParams greedy = ok;
  greedy.daily_demand = 2000.0;
  EXPECT_TRUE(
      mentions(validate_fleet({greedy}, h), "demand exceeds 986.4 kWh ceiling"));

  EvParams both = low;
  both.daily_demand = 2000.0;
  both.eta = 1.5;
  EXPECT_GE(validate_fleet({both}, h).size(), 3u);
}

TEST(Domain, DefaultInitialEnergyIsMidRange) {
  EXPECT_DOUBLE_EQ(default_e_init(EvParams{}), 30.55);
}

TEST(Domain, PricesMustBePositive) {
  Horizon h;
  h.n_periods = 3;
  EXPECT_TRUE(validate_prices({0.1, 0.2, 0.3}, h).empty());
  EXPECT_TRUE(mentions(validate_prices({0.1, -0.2, 0.3}, h), "strictly positive"));
  EXPECT_TRUE(mentions(validate_prices({0.1, 0.0, 0.3}, h), "strictly positive"));
  EXPECT_FALSE(validate_prices({0.1, 0.2}, h).empty());
}

TEST(Domain, AggregatorAndUncertaintyValidation) {
  EXPECT_TRUE(validate_aggregator({}).empty());
  EXPECT_FALSE(validate_aggregator({8000.0, 500.0, 1000.0}).empty());
  EXPECT_FALSE(validate_aggregator({0.0, 2000.0, 1000.0}).empty());
  Horizon h;
  h.n_periods = 3;
  EXPECT_TRUE(validate_uncertainty({2, {0, 1, 0}, {1, 1, 0}}, h).empty());
  EXPECT_FALSE(validate_uncertainty({3, {0, 1, 0}, {1, 1, 0}}, h).empty());
  EXPECT_FALSE(validate_uncertainty({1, {1, 0, 0}, {0, 1, 0}}, h).empty());
  EXPECT_FALSE(validate_horizon({0, 1.0}).empty());
  EXPECT_FALSE(validate_horizon({24, 0.0}).empty());
}

TEST(Domain, MetricsIdentity) {
  MetricsReport table;
  table.c_da = 5875.2;
  table.d_da = 1686.0;
  table.r_da = 5278.8;
  table.tc_da = 2282.4;
  EXPECT_TRUE(table.identity_holds());

  Horizon h;
  h.n_periods = 4;
  const MetricsReport m =
      day_ahead_metrics({10.0, -4.0, 0.0, 2.5}, {0.2, 0.3, 0.1, 0.4}, 1.5, h);
  EXPECT_NEAR(m.c_da, 10.0 * 0.2 + 2.5 * 0.4, 1e-12);
  EXPECT_NEAR(m.r_da, 4.0 * 0.3, 1e-12);
  EXPECT_NEAR(m.e_bought, 0.0125, 1e-15);
  EXPECT_NEAR(m.e_sold, 0.004, 1e-15);
  EXPECT_TRUE(m.identity_holds());

  MetricsReport sum = m;
  sum += m;
  EXPECT_TRUE(sum.identity_holds());
  EXPECT_NEAR(sum.tc_da, 2 * m.tc_da, 1e-12);
}

HistoryWindow window_of(const std::vector<std::vector<int>>& avail,
                        const std::vector<std::vector<double>>& cons = {}) {
  HistoryWindow w;
  w.n_periods = static_cast<int>(avail.front().size());
  w.days.resize(1);
  for (std::size_t d = 0; d < avail.size(); ++d) {
    DayRecord r;
    r.avail = avail[d];
    r.cons = cons.empty() ? std::vector<double>(avail[d].size(), 0.0) : cons[d];
    w.days[0].push_back(r);
  }
  return w;
}

std::vector<int> with_count(int n_avail, int n = 24) {
  std::vector<int> a(n, 0);
  for (int t = 0; t < n_avail; ++t) a[t] = 1;
  return a;
}

TEST(Estimation, KIsFloorOfMean) {
  EXPECT_EQ(estimate_k(window_of({with_count(18), with_count(13), with_count(14),
                                  with_count(11)}))[0],
            14);
  EXPECT_EQ(estimate_k(window_of({with_count(12), with_count(12), with_count(12),
                                  with_count(12)}))[0],
            12);
  EXPECT_EQ(estimate_k(window_of({with_count(5), with_count(6)}))[0], 5);
  EXPECT_THROW(estimate_k(HistoryWindow{}), std::invalid_argument);
}

TEST(Estimation, ProductBounds) {
  const auto b =
      estimate_bounds(window_of({{1, 0, 1}, {1, 0, 0}, {1, 0, 1}, {1, 0, 0}}));
  EXPECT_EQ(b[0].a_lo, (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(b[0].a_hi, (std::vector<int>{1, 0, 1}));
}

TEST(Estimation, ExpectedProfilesAndDemand) {
  const auto w = window_of({{1, 1, 0}, {1, 0, 0}, {1, 1, 0}, {1, 0, 0}},
                           {{0, 0, 4}, {0, 0, 0}, {0, 0, 2}, {0, 0, 2}});
  const auto e = expected_profiles(w);
  EXPECT_DOUBLE_EQ(e.alpha[0][0], 1.0);
  EXPECT_DOUBLE_EQ(e.alpha[0][1], 0.5);
  EXPECT_DOUBLE_EQ(e.tau[0][2], 2.0);
  EXPECT_DOUBLE_EQ(expected_daily_demand(w)[0], 2.0);

  const auto two = window_of({{0, 0}, {0, 0}}, {{8, 0}, {6, 6}});
  EXPECT_DOUBLE_EQ(expected_daily_demand(two)[0], 10.0);
}

TEST(Estimation, ScenariosAreEquiprobableCopies) {
  const auto w = window_of({{1, 0}, {0, 1}, {1, 1}, {0, 0}});
  const ScenarioSet s = build_scenarios(w);
  ASSERT_EQ(s.size(), 4);
  for (double p : s.probability) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_EQ(s.realized[1][0].avail, (std::vector<int>{0, 1}));
  EXPECT_EQ(build_scenarios(window_of({{1, 0}})).probability,
            (std::vector<double>{1.0}));
}

TEST(Estimation, RandomWindowsRespectBoundOrdering) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.6);
  for (int rep = 0; rep < 200; ++rep) {
    HistoryWindow w;
    w.n_periods = 24;
    w.days.resize(3);
    for (auto& ev : w.days) {
      for (int d = 0; d < 4; ++d) {
        DayRecord r;
        for (int t = 0; t < 24; ++t) r.avail.push_back(coin(rng));
        r.cons.assign(24, 0.0);
        ev.push_back(r);
      }
    }
    const auto sets = estimate_uncertainty(w);
    const auto e = expected_profiles(w);
    for (int v = 0; v < 3; ++v) {
      EXPECT_GE(sets[v].sum_hi(), sets[v].k_min);
      for (int t = 0; t < 24; ++t) {
        EXPECT_LE(sets[v].a_lo[t], e.alpha[v][t]);
        EXPECT_GE(sets[v].a_hi[t], e.alpha[v][t]);
      }
    }
  }
}

TEST(Estimation, WindowSelectionAndValidation) {
  AvailabilityHistory h;
  h.n_periods = 2;
  h.ev_days.resize(1);
  for (int d = 0; d < 30; ++d) {
    h.ev_days[0].push_back({{d % 2, 1}, {0.0, 0.0}});
  }
  const HistoryWindow w = select_window(h, 28);
  ASSERT_EQ(w.length(), 4);
  EXPECT_EQ(w.days[0][0].avail[0], 21 % 2);
  EXPECT_EQ(w.days[0][3].avail[0], 0);
  EXPECT_THROW(select_window(h, 27, 4, 7), std::out_of_range);

  EXPECT_NO_THROW(validate_history(h));
  h.ev_days[0][3].cons[1] = 2.0;  // consumption while plugged in
  EXPECT_THROW(validate_history(h), std::invalid_argument);
  h.ev_days[0][3].cons[1] = 0.0;
  h.ev_days[0][4].avail[0] = 2;
  EXPECT_THROW(validate_history(h), std::invalid_argument);
  h.ev_days[0][4].avail = {1};
  EXPECT_THROW(validate_history(h), std::invalid_argument);
}

}  // namespace
}  // namespace evagg
