#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "evagg/harness.hpp"
#include "evagg/lp_core.hpp"

namespace evagg::harness {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

lp::LpSolution solve_checked(const lp::LinearModel& model, const char* what) {
  lp::LpSolution s = lp::solve_lp(model);
  if (s.status != lp::LpStatus::kOptimal) {
    throw std::runtime_error(std::string(what) + " solve ended " +
                             std::string(lp::to_string(s.status)));
  }
  return s;
}

double planned_degradation(const std::vector<EvSchedule>& evs) {
  double total = 0.0;
  for (const auto& s : evs) {
    for (double c : s.cdeg) total += c;
  }
  return total;
}

// Single-EV robust solve; the feeder rating in params applies to this EV.
struct EvRobust {
  models::ModelArtifacts art;
  milp::MilpSolution sol;
};

EvRobust solve_single(const EvParams& ev, const std::vector<double>& prices,
                      const UncertaintySet& set, const AggregatorParams& params,
                      const Horizon& horizon) {
  EvRobust r;
  r.art = models::build_robust_milp({ev}, prices, {set}, params, horizon);
  r.sol = milp::solve_milp(r.art.model);
  return r;
}

// Row name of EV 0 in a single-EV model, renamed for EV v.
std::string rename_ev(const std::string& name, int v) {
  for (std::size_t pos = name.find("_v0"); pos != std::string::npos;
       pos = name.find("_v0", pos + 1)) {
    const std::size_t end = pos + 3;
    if (end == name.size() || name[end] == '_') {
      return name.substr(0, pos) + "_v" + std::to_string(v) + name.substr(end);
    }
  }
  return name;
}

// Root basis for the coupled robust model. The single-EV relaxations are
// solved with a feeder that cannot bind and their optimal bases merged; the
// EVs share only the power balance rows, where the aggregate p_t is made
// basic. The merged basis is optimal for the coupled relaxation without the
// feeder limit, so the root solve starts a few dual pivots from the answer.
std::optional<lp::Basis> merged_root_basis(const models::ModelArtifacts& full,
                                           const FleetSpec& fleet,
                                           const std::vector<double>& prices,
                                           const std::vector<UncertaintySet>& sets,
                                           AggregatorParams loose,
                                           const Horizon& horizon) {
  lp::Basis out;
  out.columns.assign(full.model.num_variables(), lp::BasisStatus::kAtLower);
  out.rows.assign(full.model.num_constraints(), lp::BasisStatus::kAtLower);
  for (std::size_t v = 0; v < fleet.size(); ++v) {
    loose.feeder_cap = std::max(fleet[v].c_max, fleet[v].d_max) + 1.0;
    const models::ModelArtifacts one =
        models::build_robust_milp({fleet[v]}, prices, {sets[v]}, loose, horizon);
    const lp::LpSolution s = lp::solve_lp(one.model);
    if (s.status != lp::LpStatus::kOptimal) return std::nullopt;
    for (const auto& [key, col] : one.vars) {
      if (key.role == models::Role::kPower) continue;
      out.columns[full.var(key.role, static_cast<int>(v), key.t, key.scenario)] =
          s.basis.columns[col];
    }
    for (int i = 0; i < one.model.num_constraints(); ++i) {
      if (one.row_tag[i] == models::tags::kPowerBalance) continue;
      const int row = full.model.find_constraint(
          rename_ev(one.model.constraint(i).name, static_cast<int>(v)));
      if (row < 0) return std::nullopt;
      out.rows[row] = s.basis.rows[i];
    }
  }
  for (int t = 0; t < horizon.n_periods; ++t) {
    out.columns[full.var(models::Role::kPower, -1, t, -1)] =
        lp::BasisStatus::kBasic;
  }
  return out;
}

}  // namespace

double CampaignConfig::feeder_cap(int n_evs) const {
  const double ref = feeder_ref > 0.0 ? feeder_ref : 8.0 * n_evs;
  return ref * (1.0 - feeder_reduction);
}

std::vector<std::string> CampaignConfig::validate(const CampaignData& data) const {
  std::vector<std::string> out;
  if (!run_df && !run_sf && !run_hf) out.push_back("no model selected");
  if (n_days < 1) out.push_back("n_days must be >= 1");
  if (window_length < 1 || window_step < 1) {
    out.push_back("window length and step must be >= 1");
  }
  if (price_lookback < 1) out.push_back("price lookback must be >= 1");
  if (!(feeder_reduction >= 0.0 && feeder_reduction < 1.0)) {
    out.push_back("feeder reduction must lie in [0, 1)");
  }
  if (first_day < window_length * window_step) {
    out.push_back("first day leaves fewer than " +
                  std::to_string(window_length) + " prior same-weekday days");
  }
  if (first_day < price_lookback) {
    out.push_back("first day leaves too few prior price days");
  }
  if (first_day + n_days > data.history.n_days()) {
    out.push_back("campaign runs past the availability history");
  }
  if (first_day + n_days > static_cast<int>(data.prices.size())) {
    out.push_back("campaign runs past the price history");
  }
  if (static_cast<int>(data.fleet.size()) != data.history.n_evs()) {
    out.push_back("fleet and history differ in EV count");
  }
  if (threads < 1) out.push_back("threads must be >= 1");
  for (auto& s : validate_aggregator(params)) out.push_back(std::move(s));
  return out;
}

std::vector<UncertaintySet> shift_k(const FleetSpec& fleet,
                                    std::vector<UncertaintySet> sets, int offset,
                                    const Horizon& horizon) {
  for (std::size_t v = 0; v < sets.size(); ++v) {
    const int k0 = sets[v].k_min;
    const int target = k0 + offset;
    // Candidates by distance to the target, then by distance to the estimate.
    std::vector<int> order;
    for (int k = 0; k <= sets[v].sum_hi(); ++k) order.push_back(k);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const int da = std::abs(a - target);
      const int db = std::abs(b - target);
      if (da != db) return da < db;
      return std::abs(a - k0) < std::abs(b - k0);
    });
    for (int k : order) {
      UncertaintySet trial = sets[v];
      trial.k_min = k;
      if (models::robust_diagnostics({fleet[v]}, {trial}, horizon).empty()) {
        sets[v].k_min = k;
        break;
      }
    }
  }
  return sets;
}

RobustSolve solve_robust(const FleetSpec& fleet, const std::vector<double>& prices,
                         const std::vector<UncertaintySet>& sets,
                         const AggregatorParams& params, const Horizon& horizon,
                         const CampaignConfig& cfg) {
  const int n_v = static_cast<int>(fleet.size());
  const int n_t = horizon.n_periods;
  double max_flow = 0.0;
  for (const auto& ev : fleet) max_flow += std::max(ev.c_max, ev.d_max);

  RobustSolve out;
  if (params.feeder_cap >= max_flow) {
    // The feeder cannot bind, so the EVs only share the objective.
    out.status = milp::MilpStatus::kOptimal;
    out.solution.kind = ModelKind::kRobust;
    out.solution.p.assign(n_t, 0.0);
    for (int v = 0; v < n_v; ++v) {
      EvRobust r = solve_single(fleet[v], prices, sets[v], params, horizon);
      if (r.sol.status != milp::MilpStatus::kOptimal) {
        throw std::runtime_error("robust model for EV " + fleet[v].id + " " +
                                 std::string(milp::to_string(r.sol.status)));
      }
      const DispatchSolution one =
          models::decode(r.art, r.sol.x, {fleet[v]}, params);
      for (int t = 0; t < n_t; ++t) out.solution.p[t] += one.p[t];
      out.solution.evs.push_back(one.evs[0]);
      out.solution.duals.push_back(one.duals[0]);
      out.objective += r.sol.objective;
    }
    out.solution.objective = out.objective;
    return out;
  }

  // Binding feeder: split the rating evenly to get a feasible start, then
  // search the coupled model.
  const models::ModelArtifacts full =
      models::build_robust_milp(fleet, prices, sets, params, horizon);
  milp::BnbConfig bnb;
  bnb.rel_gap = cfg.hf_rel_gap;
  bnb.node_limit = cfg.hf_node_limit;
  bnb.time_limit_seconds = cfg.hf_time_limit;
  AggregatorParams share = params;
  share.feeder_cap = params.feeder_cap / n_v;
  std::vector<double> start(full.model.num_variables(), 0.0);
  bool have_start = true;
  for (int v = 0; v < n_v && have_start; ++v) {
    EvRobust r = solve_single(fleet[v], prices, sets[v], share, horizon);
    if (!r.sol.has_incumbent()) {
      have_start = false;
      break;
    }
    for (const auto& [key, col] : r.art.vars) {
      if (key.role == models::Role::kPower) {
        start[full.var(key.role, -1, key.t, -1)] += r.sol.x[col];
      } else {
        start[full.var(key.role, v, key.t, key.scenario)] = r.sol.x[col];
      }
    }
  }
  if (have_start) bnb.initial_solution = start;
  bnb.root_basis =
      merged_root_basis(full, fleet, prices, sets, params, horizon);
  const milp::MilpSolution s = milp::solve_milp(full.model, bnb);
  out.status = s.status;
  if (!s.has_incumbent()) {
    throw std::runtime_error("coupled robust model " +
                             std::string(milp::to_string(s.status)));
  }
  out.objective = s.objective;
  out.gap = s.gap / std::max(1.0, std::abs(s.objective));
  out.solution = models::decode(full, s.x, fleet, params);
  return out;
}

DayResult run_day(int day, const CampaignConfig& cfg, const CampaignData& data) {
  const Horizon horizon{data.history.n_periods, 1.0};
  const int n_v = data.history.n_evs();
  const HistoryWindow window =
      select_window(data.history, day, cfg.window_length, cfg.window_step);
  const std::vector<double> prices =
      price_forecast(data.prices, day, cfg.price_lookback);
  AggregatorParams params = cfg.params;
  params.feeder_cap = cfg.feeder_cap(n_v);
  std::vector<DayRecord> realized(n_v);
  for (int v = 0; v < n_v; ++v) realized[v] = data.history.ev_days[v].at(day);

  DayResult result;
  result.day = day;
  auto evaluate = [&](ModelDayResult& r, double degradation,
                      Clock::time_point start) {
    r.metrics = day_ahead_metrics(r.p, prices, degradation, horizon);
    r.metrics.solve_time = seconds_since(start);
    const models::ModelArtifacts fp =
        models::build_feasibility(data.fleet, realized, r.p, params, horizon);
    const lp::LpSolution fs = solve_checked(fp.model, "feasibility");
    const models::FeasibilityOutcome o = models::read_feasibility(fp, fs.x);
    r.feasibility_objective = o.objective;
    r.slack_kwh = o.slack_kwh;
    r.unmet_kwh = o.unmet_sale_kwh;
    r.metrics.s_fp = o.slack_kwh / 1000.0;
    r.metrics.e_minus_fp = o.unmet_sale_kwh / 1000.0;
  };

  if (cfg.run_df) {
    const auto start = Clock::now();
    ModelDayResult r;
    r.kind = ModelKind::kDeterministic;
    const ExpectedProfiles e = expected_profiles(window);
    const auto art = models::build_deterministic(data.fleet, prices, e.alpha,
                                                 e.tau, params, horizon);
    const lp::LpSolution s = solve_checked(art.model, "deterministic");
    const DispatchSolution sol = models::decode(art, s.x, data.fleet, params);
    r.p = sol.p;
    r.objective = s.objective;
    r.solver_status = "optimal";
    r.max_simultaneous = models::max_simultaneous(sol);
    evaluate(r, planned_degradation(sol.evs), start);
    result.models.push_back(std::move(r));
  }
  if (cfg.run_sf) {
    const auto start = Clock::now();
    ModelDayResult r;
    r.kind = ModelKind::kStochastic;
    const ScenarioSet sc = build_scenarios(window);
    const auto art =
        models::build_stochastic(data.fleet, prices, sc, params, horizon);
    const lp::LpSolution s = solve_checked(art.model, "stochastic");
    const DispatchSolution sol = models::decode(art, s.x, data.fleet, params);
    r.p = sol.p;
    r.objective = s.objective;
    r.solver_status = "optimal";
    r.max_simultaneous = models::max_simultaneous(sol);
    double degradation = 0.0;
    for (std::size_t w = 0; w < sol.scenarios.size(); ++w) {
      degradation += sol.probabilities[w] * planned_degradation(sol.scenarios[w]);
    }
    evaluate(r, degradation, start);
    result.models.push_back(std::move(r));
  }
  if (cfg.run_hf) {
    const auto start = Clock::now();
    ModelDayResult r;
    r.kind = ModelKind::kRobust;
    FleetSpec fleet = data.fleet;
    const std::vector<double> demand = expected_daily_demand(window);
    for (int v = 0; v < n_v; ++v) fleet[v].daily_demand = demand[v];
    const std::vector<UncertaintySet> sets =
        shift_k(fleet, estimate_uncertainty(window), cfg.k_offset, horizon);
    for (const auto& u : sets) r.k_used.push_back(u.k_min);
    const RobustSolve rs = solve_robust(fleet, prices, sets, params, horizon, cfg);
    r.p = rs.solution.p;
    r.objective = rs.objective;
    r.solver_status = milp::to_string(rs.status);
    r.mip_gap = rs.gap;
    r.max_simultaneous = models::max_simultaneous(rs.solution);
    if (cfg.audit) {
      r.audit = models::audit_robust(rs.solution, fleet, sets, horizon);
      r.audit_passed = r.audit.passed();
    }
    evaluate(r, planned_degradation(rs.solution.evs), start);
    result.models.push_back(std::move(r));
  }
  return result;
}

const MetricsReport* CampaignResult::total(ModelKind kind) const {
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == kind) return &totals[i];
  }
  return nullptr;
}

CampaignResult run_campaign(const CampaignConfig& cfg, const CampaignData& data) {
  const auto diag = cfg.validate(data);
  if (!diag.empty()) {
    std::string msg = "invalid campaign:";
    for (const auto& s : diag) msg += "\n  " + s;
    throw std::invalid_argument(msg);
  }
  const auto start = Clock::now();
  CampaignResult out;
  out.days.resize(cfg.n_days);
  std::vector<std::exception_ptr> errors(cfg.n_days);
  auto work = [&](int worker) {
    for (int i = worker; i < cfg.n_days; i += cfg.threads) {
      try {
        out.days[i] = run_day(cfg.first_day + i, cfg, data);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (cfg.threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < cfg.n_days; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("day " + std::to_string(cfg.first_day + i) +
                               ": " + e.what());
    }
  }
  // Day order reduction keeps the totals reproducible.
  for (const auto& m : out.days.front().models) {
    out.kinds.push_back(m.kind);
    out.totals.emplace_back();
  }
  for (const DayResult& d : out.days) {
    for (std::size_t k = 0; k < d.models.size(); ++k) {
      out.totals[k] += d.models[k].metrics;
      out.all_audits_passed = out.all_audits_passed && d.models[k].audit_passed;
    }
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

namespace {

std::string num(double x, const char* format) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, x);
  return buf;
}

const char* short_name(ModelKind k) {
  switch (k) {
    case ModelKind::kDeterministic: return "DF";
    case ModelKind::kStochastic: return "SF";
    case ModelKind::kRobust: return "HF";
  }
  return "?";
}

}  // namespace

void write_summary_csv(const CampaignResult& result, std::ostream& out) {
  out << "day,model,tc_da,c_da,d_da,r_da,e_bought,e_sold,s_fp,e_minus_fp,"
         "solve_time,status,mip_gap,audit\n";
  for (const DayResult& d : result.days) {
    for (const ModelDayResult& m : d.models) {
      const MetricsReport& r = m.metrics;
      out << d.day << ',' << short_name(m.kind) << ',' << num(r.tc_da, "%.6f")
          << ',' << num(r.c_da, "%.6f") << ',' << num(r.d_da, "%.6f") << ','
          << num(r.r_da, "%.6f") << ',' << num(r.e_bought, "%.6f") << ','
          << num(r.e_sold, "%.6f") << ',' << num(r.s_fp, "%.6f") << ','
          << num(r.e_minus_fp, "%.6f") << ',' << num(r.solve_time, "%.3f")
          << ',' << m.solver_status << ',' << num(m.mip_gap, "%.3g") << ','
          << (m.audit_passed ? "pass" : "fail") << '\n';
    }
  }
}

std::string comparison_table(const CampaignResult& result) {
  std::ostringstream os;
  char head[64];
  std::snprintf(head, sizeof head, "%-22s", "metric");
  os << head;
  for (ModelKind k : result.kinds) {
    std::snprintf(head, sizeof head, "%12s", short_name(k));
    os << head;
  }
  os << '\n';
  struct Row {
    const char* label;
    double MetricsReport::*field;
    const char* format;
  };
  const Row rows[] = {
      {"TC_DA (EUR)", &MetricsReport::tc_da, "%12.1f"},
      {"C_DA (EUR)", &MetricsReport::c_da, "%12.1f"},
      {"D_DA (EUR)", &MetricsReport::d_da, "%12.1f"},
      {"R_DA (EUR)", &MetricsReport::r_da, "%12.1f"},
      {"E_B (MWh)", &MetricsReport::e_bought, "%12.3f"},
      {"E_S (MWh)", &MetricsReport::e_sold, "%12.3f"},
      {"s_FP (MWh)", &MetricsReport::s_fp, "%12.3f"},
      {"E-_FP (MWh)", &MetricsReport::e_minus_fp, "%12.3f"},
      {"solve time (s)", &MetricsReport::solve_time, "%12.2f"},
  };
  for (const Row& row : rows) {
    std::snprintf(head, sizeof head, "%-22s", row.label);
    os << head;
    for (const MetricsReport& m : result.totals) os << num(m.*row.field, row.format);
    os << '\n';
  }
  return os.str();
}

}  // namespace evagg::harness
