// Acceptance run: one line per criterion, then a summary. Exit status is
// nonzero when an asserted criterion fails; the campaign trend checks are
// printed with their flags but do not decide the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "evagg/estimation.hpp"
#include "evagg/harness.hpp"
#include "evagg/lp_core.hpp"
#include "evagg/milp.hpp"
#include "evagg/models.hpp"
#include "evagg/oracles.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace evagg;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  std::string id;
  bool pass;
  bool asserted;
};

std::vector<Line> g_lines;

void emit(const std::string& id, bool pass, const std::string& text, double secs,
          bool asserted = true) {
  std::printf("[%s] %-3s %s (%.1f s)%s\n", pass ? "PASS" : "FAIL", id.c_str(),
              text.c_str(), secs, asserted ? "" : " [report only]");
  std::fflush(stdout);
  g_lines.push_back({id, pass, asserted});
}

void detail(const std::string& text) {
  std::printf("        %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Running tallies for the cross-cutting criteria 5, 6 and 8.
struct Tally {
  long lp_certified = 0, lp_failed = 0;
  double worst_primal = 0, worst_dual = 0, worst_comp = 0, worst_gap = 0;
  long audits = 0, audit_failures = 0;
  double worst_drain = lp::kInf, worst_sd = 0, worst_lin = 0, worst_sim = 0;
  long reports = 0, identity_failures = 0;
} g;

void certify(const lp::LinearModel& m, const lp::LpSolution& s) {
  if (s.status != lp::LpStatus::kOptimal) return;
  const lp::DualityReport r = lp::check_duality(m, s);
  (r.certified() ? g.lp_certified : g.lp_failed)++;
  g.worst_primal = std::max(g.worst_primal, r.primal_residual);
  g.worst_dual = std::max(g.worst_dual, r.dual_residual);
  g.worst_comp = std::max(g.worst_comp, r.complementarity);
  g.worst_gap = std::max(g.worst_gap, r.objective_gap);
}

lp::LpSolution solve_certified(const lp::LinearModel& m) {
  lp::LpSolution s = lp::solve_lp(m);
  certify(m, s);
  return s;
}

void record_audit(const models::RobustAudit& a) {
  ++g.audits;
  if (!a.passed(1e-6)) ++g.audit_failures;
  g.worst_drain = std::min(g.worst_drain, a.worst_drain_margin);
  g.worst_sd = std::max(g.worst_sd, a.strong_duality_residual);
  g.worst_lin = std::max(g.worst_lin, a.linearization_residual);
  g.worst_sim = std::max(g.worst_sim, a.simultaneous);
}

void record_metrics(const MetricsReport& m) {
  ++g.reports;
  if (!m.identity_holds(1e-6)) ++g.identity_failures;
}

// Dyadic weights keep every objective sum exact in floating point.
oracles::LowerLevelInstance lower_level(std::mt19937_64& rng, int n, bool signed_w) {
  std::uniform_int_distribution<int> w(signed_w ? -80 : 0, 80);
  std::uniform_int_distribution<int> kind(0, 5);
  oracles::LowerLevelInstance in;
  for (int t = 0; t < n; ++t) {
    in.w.push_back(w(rng) / 16.0);
    const int k = kind(rng);
    in.a_lo.push_back(k == 0);
    in.a_hi.push_back(k != 1);
  }
  int hi = 0;
  for (int a : in.a_hi) hi += a;
  in.k_min = std::uniform_int_distribution<int>(0, hi)(rng);
  return in;
}

oracles::LowerLevelSolution greedy(const oracles::LowerLevelInstance& in, bool drain) {
  return drain ? oracles::solve_lower_A(in) : oracles::solve_lower_B(in);
}

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  int ok = 0, fractional = 0, mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool drain = i % 2 == 0;
    const auto in = lower_level(rng, 24, drain);
    const auto m = oracles::lower_level_relaxation(in);
    const auto s = solve_certified(m);
    const auto ref = greedy(in, drain);
    bool integral = s.status == lp::LpStatus::kOptimal;
    double at_vertex = 0.0;
    for (int t = 0; integral && t < 24; ++t) {
      const double r = std::round(s.x[t]);
      integral = std::abs(s.x[t] - r) <= 1e-9;
      at_vertex += in.w[t] * r;
    }
    if (!integral) {
      ++fractional;
    } else if (at_vertex != ref.objective || std::abs(s.objective - ref.objective) > 1e-9) {
      ++mismatched;
    } else {
      ++ok;
    }
  }
  const double secs = since(t0);
  emit("1", ok == 1000 && secs < 30.0,
       "TU/integrality: " + std::to_string(ok) + "/1000 relaxations integral and equal to greedy (" +
           std::to_string(fractional) + " fractional, " + std::to_string(mismatched) +
           " mismatched)",
       secs);
}

void criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2002);
  int total = 0, ok = 0;
  for (int n = 1; n <= 12; ++n) {
    for (int i = 0; i < 100; ++i) {
      const bool drain = i % 2 == 0;
      const auto in = lower_level(rng, n, drain);
      const auto a = greedy(in, drain);
      const auto b = oracles::solve_lower_exhaustive(in);
      ++total;
      if (a.objective == b.objective) ++ok;
    }
  }
  const double secs = since(t0);
  emit("2", ok == total && secs < 60.0,
       "greedy vs exhaustive: " + std::to_string(ok) + "/" + std::to_string(total) +
           " exact matches, T = 1..12",
       secs);
}

void criterion_3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3003);
  int agree = 0, infeasible = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto rc = testing::random_robust_case(rng, 1 + i % 2, 3 + i % 4);
    const oracles::BilevelInstance in{rc.horizon, rc.fleet, rc.sets, rc.prices, rc.params};
    const auto exact = oracles::enumerate_bilevel(in);
    const auto art = models::build_robust_milp(rc.fleet, rc.prices, rc.sets, rc.params,
                                               rc.horizon);
    certify(art.model, lp::solve_lp(art.model));
    const auto s = milp::solve_milp(art.model);
    if (!exact.feasible) {
      if (s.status == milp::MilpStatus::kInfeasible) {
        ++agree;
        ++infeasible;
      }
      continue;
    }
    if (s.status != milp::MilpStatus::kOptimal) continue;
    const double diff = std::abs(s.objective - exact.objective);
    worst = std::max(worst, diff);
    const auto sol = models::decode(art, s.x, rc.fleet, rc.params);
    record_audit(models::audit_robust(sol, rc.fleet, rc.sets, rc.horizon));
    if (diff <= 1e-6) ++agree;
  }
  const double secs = since(t0);
  emit("3", agree == 50 && secs < 300.0,
       "bilevel equivalence: " + std::to_string(agree) + "/50 agree with enumeration (" +
           std::to_string(infeasible) + " infeasible in both), max |diff| " +
           fmt("%.2e", worst),
       secs);
}

void criterion_4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4004);
  int robust_ok = 0, stochastic_ok = 0;
  double worst_r = 0.0, worst_s = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto cc = testing::random_collapse_case(rng, 1 + i % 3, 4 + i % 5);
    const auto det_art = models::build_deterministic(cc.fleet, cc.prices, cc.alpha,
                                                     cc.tau, cc.params, cc.horizon);
    const auto det = solve_certified(det_art.model);
    const auto rob_art = models::build_robust_milp(cc.fleet, cc.prices, cc.sets,
                                                   cc.params, cc.horizon);
    const auto rob = milp::solve_milp(rob_art.model);
    ScenarioSet one;
    one.probability = {1.0};
    one.realized = {cc.days};
    const auto sto_art =
        models::build_stochastic(cc.fleet, cc.prices, one, cc.params, cc.horizon);
    const auto sto = solve_certified(sto_art.model);
    if (det.status != lp::LpStatus::kOptimal) continue;
    if (rob.status == milp::MilpStatus::kOptimal) {
      const double d = std::abs(rob.objective - det.objective);
      worst_r = std::max(worst_r, d);
      if (d <= 1e-6) ++robust_ok;
      const auto sol = models::decode(rob_art, rob.x, cc.fleet, cc.params);
      record_audit(models::audit_robust(sol, cc.fleet, cc.sets, cc.horizon));
    }
    if (sto.status == lp::LpStatus::kOptimal) {
      const double d = std::abs(sto.objective - det.objective);
      worst_s = std::max(worst_s, d);
      if (d <= 1e-6) ++stochastic_ok;
    }
  }
  const double secs = since(t0);
  emit("4", robust_ok == 50 && stochastic_ok == 50 && secs < 120.0,
       "collapse equivalence: robust " + std::to_string(robust_ok) + "/50 (max " +
           fmt("%.2e", worst_r) + "), one-scenario stochastic " +
           std::to_string(stochastic_ok) + "/50 (max " + fmt("%.2e", worst_s) + ")",
       secs);
}

void criterion_7() {
  const auto t0 = Clock::now();
  const AggregatorParams params;
  bool ok = true;

  // Perfect foresight: the plan is evaluated on the day it was built for.
  std::mt19937_64 rng(7007);
  const auto cc = testing::random_collapse_case(rng, 2, 24);
  const auto det = models::build_deterministic(cc.fleet, cc.prices, cc.alpha, cc.tau,
                                               cc.params, cc.horizon);
  const auto plan = models::decode(det, solve_certified(det.model).x, cc.fleet, cc.params);
  const auto fp0 = models::build_feasibility(cc.fleet, cc.days, plan.p, params, cc.horizon);
  const auto o0 = models::read_feasibility(fp0, solve_certified(fp0.model).x);
  ok = ok && std::abs(o0.objective) <= 1e-6;
  detail("perfect foresight: objective " + fmt("%.3g", o0.objective) + " (expected 0)");

  // Absent all day with 10 kWh consumed: the whole trip is slack.
  const Horizon h24{24, 1.0};
  DayRecord away{std::vector<int>(24, 0), std::vector<double>(24, 0.0)};
  away.cons[8] = 6.0;
  away.cons[17] = 4.0;
  const auto fp1 = models::build_feasibility(FleetSpec(1), {away},
                                             std::vector<double>(24, 0.0), params, h24);
  const auto o1 = models::read_feasibility(fp1, solve_certified(fp1.model).x);
  const double want1 = 10.0 * params.pen_balance;
  ok = ok && std::abs(o1.objective - want1) <= 1e-6 && std::abs(o1.slack_kwh - 10.0) <= 1e-9;
  detail("forced slack: s = " + fmt("%.6g", o1.slack_kwh) + " kWh, objective " +
         fmt("%.6g", o1.objective) + " (expected " + fmt("%.6g", want1) + ")");

  // A 5 kW sale while the only EV is away cannot be delivered.
  const Horizon h4{4, 1.0};
  DayRecord gone{{0, 0, 0, 0}, {0, 0, 0, 0}};
  const auto fp2 =
      models::build_feasibility(FleetSpec(1), {gone}, {0.0, -5.0, 0.0, 0.0}, params, h4);
  const auto o2 = models::read_feasibility(fp2, solve_certified(fp2.model).x);
  const double want2 = 5.0 * params.pen_sale;
  ok = ok && std::abs(o2.objective - want2) <= 1e-6 &&
       std::abs(o2.unmet_sale_kwh - 5.0) <= 1e-9;
  detail("forced unmet sale: p- = " + fmt("%.6g", o2.unmet_sale_kwh) + " kW, objective " +
         fmt("%.6g", o2.objective) + " (expected " + fmt("%.6g", want2) + ")");
  emit("7", ok, "feasibility-problem examples", since(t0));
}

// Random MILP with 8 binaries and 3 bounded continuous columns.
lp::LinearModel random_milp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-4.0, 6.0);
  std::uniform_real_distribution<double> cost(-5.0, 5.0);
  std::uniform_real_distribution<double> rhs(2.0, 12.0);
  lp::LinearModel m;
  for (int j = 0; j < 8; ++j) {
    m.add_variable("b" + std::to_string(j), 0.0, 1.0, true);
    m.set_objective(j, cost(rng));
  }
  for (int j = 0; j < 3; ++j) {
    const int y = m.add_variable("y" + std::to_string(j), 0.0, 4.0);
    m.set_objective(y, cost(rng));
  }
  for (int i = 0; i < 5; ++i) {
    std::vector<lp::Term> row;
    for (int j = 0; j < 11; ++j) {
      if (std::bernoulli_distribution(0.7)(rng)) row.push_back({j, coef(rng)});
    }
    if (row.empty()) row.push_back({i, 1.0});
    const bool ge = i == 4;
    m.add_constraint("r" + std::to_string(i), row,
                     ge ? lp::Sense::kGreaterEqual : lp::Sense::kLessEqual,
                     ge ? -rhs(rng) : rhs(rng));
  }
  return m;
}

void criterion_10() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(10010);
  int agree = 0, infeasible = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const lp::LinearModel m = random_milp(rng);
    double best = lp::kInf;
    for (int mask = 0; mask < 256; ++mask) {
      lp::LinearModel fixed = m;
      for (int j = 0; j < 8; ++j) {
        const double v = (mask >> j) & 1;
        fixed.set_bounds(j, v, v);
      }
      const auto s = solve_certified(fixed);
      if (s.status == lp::LpStatus::kOptimal) best = std::min(best, s.objective);
    }
    const auto s = milp::solve_milp(m);
    if (best == lp::kInf) {
      if (s.status == milp::MilpStatus::kInfeasible) {
        ++agree;
        ++infeasible;
      }
      continue;
    }
    if (s.status != milp::MilpStatus::kOptimal) continue;
    const double d = std::abs(s.objective - best);
    worst = std::max(worst, d);
    if (d <= 1e-6) ++agree;
  }
  // Count-constrained selection models are totally unimodular.
  std::mt19937_64 rng2(10011);
  int root = 0;
  for (int i = 0; i < 100; ++i) {
    const auto in = lower_level(rng2, 24, i % 2 == 0);
    lp::LinearModel m;
    std::vector<lp::Term> count;
    for (int t = 0; t < 24; ++t) {
      const int a = m.add_variable("a" + std::to_string(t), in.a_lo[t], in.a_hi[t], true);
      m.set_objective(a, in.w[t]);
      count.push_back({a, 1.0});
    }
    m.add_constraint("count", count, lp::Sense::kGreaterEqual, in.k_min);
    const auto s = milp::solve_milp(m);
    if (s.status == milp::MilpStatus::kOptimal && s.branches == 0) ++root;
  }
  emit("10", agree == 200 && root == 100,
       "MILP correctness: " + std::to_string(agree) + "/200 match 2^8 enumeration (" +
           std::to_string(infeasible) + " infeasible in both, max |diff| " +
           fmt("%.2e", worst) + "); " + std::to_string(root) +
           "/100 TU models solved at the root",
       since(t0));
}

void criterion_11() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11011);
  const auto rc = testing::random_robust_case(rng, 2, 24);
  const auto art =
      models::build_robust_milp(rc.fleet, rc.prices, rc.sets, rc.params, rc.horizon);
  const std::string first = milp::write_lp(art.model);
  const std::string second = milp::write_lp(milp::parse_lp(first));
  emit("11", first == second,
       "LP-file round trip on the 2-EV robust model: " + std::to_string(first.size()) +
           " bytes, " + (first == second ? "identical" : "different"),
       since(t0));
}

// The large LPs of one campaign day, certified directly.
void certify_campaign_day(const harness::CampaignData& data, int day) {
  const HistoryWindow w = select_window(data.history, day);
  const auto prices = harness::price_forecast(data.prices, day);
  harness::CampaignConfig cfg;
  AggregatorParams params = cfg.params;
  params.feeder_cap = cfg.feeder_cap(static_cast<int>(data.fleet.size()));
  const ExpectedProfiles e = expected_profiles(w);
  solve_certified(
      models::build_deterministic(data.fleet, prices, e.alpha, e.tau, params).model);
  solve_certified(
      models::build_stochastic(data.fleet, prices, build_scenarios(w), params).model);
}

struct CampaignRuns {
  harness::CampaignResult base, k_minus, feeder;
  double seconds = 0.0;
};

void tally_campaign(const harness::CampaignResult& r) {
  for (const auto& d : r.days) {
    for (const auto& m : d.models) {
      record_metrics(m.metrics);
      if (m.kind == ModelKind::kRobust) record_audit(m.audit);
    }
  }
  for (const auto& m : r.totals) record_metrics(m);
}

CampaignRuns criterion_9() {
  const int n_evs = 100, n_days = 28, first = 28;
  const auto sf = harness::generate_synthetic_fleet(n_evs, first + n_days, 2024);
  const harness::CampaignData data{sf.fleet, sf.history,
                                   harness::generate_synthetic_prices(first + n_days, 2024)};
  CampaignRuns runs;
  const auto t0 = Clock::now();
  harness::CampaignConfig cfg;
  cfg.first_day = first;
  cfg.n_days = n_days;
  runs.base = harness::run_campaign(cfg, data);
  detail("baseline DF/SF/HF: " + fmt("%.1f s", runs.base.wall_seconds));
  harness::CampaignConfig km = cfg;
  km.run_df = km.run_sf = false;
  km.k_offset = -5;
  runs.k_minus = harness::run_campaign(km, data);
  detail("HF with K - 5: " + fmt("%.1f s", runs.k_minus.wall_seconds));
  harness::CampaignConfig fr = cfg;
  fr.run_df = fr.run_sf = false;
  fr.feeder_reduction = 0.75;
  runs.feeder = harness::run_campaign(fr, data);
  detail("HF with the feeder reduced 75%: " + fmt("%.1f s", runs.feeder.wall_seconds));
  runs.seconds = since(t0);

  tally_campaign(runs.base);
  tally_campaign(runs.k_minus);
  tally_campaign(runs.feeder);

  std::printf("\n%s\n", harness::comparison_table(runs.base).c_str());
  const MetricsReport& df = *runs.base.total(ModelKind::kDeterministic);
  const MetricsReport& st = *runs.base.total(ModelKind::kStochastic);
  const MetricsReport& hf = *runs.base.total(ModelKind::kRobust);
  const MetricsReport& hk = *runs.k_minus.total(ModelKind::kRobust);
  const MetricsReport& hr = *runs.feeder.total(ModelKind::kRobust);

  const bool a = runs.seconds < 1800.0;
  const bool b_sfp = hf.s_fp < st.s_fp && st.s_fp < df.s_fp;
  const bool b_tc = hf.tc_da > st.tc_da && st.tc_da > df.tc_da;
  const bool c = hk.c_da > hf.c_da && hk.s_fp <= hf.s_fp;
  const bool d = hr.e_bought < hf.e_bought && hr.e_sold < hf.e_sold && hr.r_da < hf.r_da;

  auto flag = [](bool x) { return x ? "pass" : "fail"; };
  detail(std::string("(a) ") + flag(a) + ": three campaigns in " +
         fmt("%.0f s", runs.seconds) + " (limit 1800 s, one thread)");
  detail(std::string("(b) ") + flag(b_sfp && b_tc) + ": s_FP HF/SF/DF = " +
         fmt("%.3f", hf.s_fp) + "/" + fmt("%.3f", st.s_fp) + "/" + fmt("%.3f", df.s_fp) +
         " MWh (" + flag(b_sfp) + "), TC_DA HF/SF/DF = " + fmt("%.1f", hf.tc_da) + "/" +
         fmt("%.1f", st.tc_da) + "/" + fmt("%.1f", df.tc_da) + " EUR (" + flag(b_tc) + ")");
  detail(std::string("(c) ") + flag(c) + ": K - 5 C_DA " + fmt("%.1f", hk.c_da) + " vs " +
         fmt("%.1f", hf.c_da) + " EUR, s_FP " + fmt("%.3f", hk.s_fp) + " vs " +
         fmt("%.3f", hf.s_fp) + " MWh");
  detail(std::string("(d) ") + flag(d) + ": 75% feeder E_B " + fmt("%.3f", hr.e_bought) +
         " vs " + fmt("%.3f", hf.e_bought) + ", E_S " + fmt("%.3f", hr.e_sold) + " vs " +
         fmt("%.3f", hf.e_sold) + " MWh, R_DA " + fmt("%.1f", hr.r_da) + " vs " +
         fmt("%.1f", hf.r_da) + " EUR");
  emit("9a", a, "campaign runtime", runs.seconds);
  emit("9", a && b_sfp && b_tc && c && d,
       "pinned-seed campaign, 100 EVs x 28 days: orderings (b) " +
           std::string(flag(b_sfp && b_tc)) + ", K direction (c) " + flag(c) +
           ", feeder direction (d) " + flag(d),
       runs.seconds, false);

  certify_campaign_day(data, first);
  return runs;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_7();
  criterion_10();
  criterion_11();

  // Fixed regression vector of the metrics identity.
  MetricsReport table;
  table.c_da = 5875.2;
  table.d_da = 1686.0;
  table.r_da = 5278.8;
  table.tc_da = 2282.4;
  record_metrics(table);

  criterion_9();

  emit("5", g.audit_failures == 0 && g.audits > 0,
       std::to_string(g.audits - g.audit_failures) + "/" + std::to_string(g.audits) +
           " robust solves pass the audit (min drain margin " + fmt("%.2e", g.worst_drain) +
           ", duality residual " + fmt("%.2e", g.worst_sd) + ", linearization " +
           fmt("%.2e", g.worst_lin) + ", simultaneous " + fmt("%.2e", g.worst_sim) + ")",
       0.0);
  emit("6", g.lp_failed == 0 && g.lp_certified > 0,
       std::to_string(g.lp_certified) + "/" + std::to_string(g.lp_certified + g.lp_failed) +
           " optimal LP solves certified (worst primal " + fmt("%.1e", g.worst_primal) +
           ", dual " + fmt("%.1e", g.worst_dual) + ", compl. " + fmt("%.1e", g.worst_comp) +
           ", gap " + fmt("%.1e", g.worst_gap) + ")",
       0.0);
  emit("8", g.identity_failures == 0,
       std::to_string(g.reports - g.identity_failures) + "/" + std::to_string(g.reports) +
           " metric reports satisfy TC = C + D - R, including 5875.2 + 1686.0 - 5278.8 = 2282.4",
       0.0);

  int asserted_failures = 0, report_failures = 0;
  for (const Line& l : g_lines) {
    if (l.pass) continue;
    (l.asserted ? asserted_failures : report_failures)++;
  }
  std::printf("\nsummary: %d asserted failure(s), %d report-only failure(s), %.0f s\n",
              asserted_failures, report_failures, since(t0));
  return asserted_failures == 0 ? 0 : 1;
}
