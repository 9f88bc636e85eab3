#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evagg/domain.hpp"
#include "evagg/estimation.hpp"
#include "evagg/milp.hpp"
#include "evagg/models.hpp"

namespace evagg::harness {

struct SyntheticFleet {
  FleetSpec fleet;
  AvailabilityHistory history;
};

// Reproducible stand-in for survey-derived driving data. Each EV has a
// habitual morning departure around 07:00 and trip length of 1 to 4 hours,
// jittered per day, plus an optional evening trip; every driving hour
// consumes uniform(1, 6) kWh capped by the usable capacity.
SyntheticFleet generate_synthetic_fleet(int n_evs, int n_days,
                                        std::uint64_t seed);

// Positive hourly day-ahead prices (EUR/kWh) with night valleys and
// morning/evening peaks; prices[d][t].
std::vector<std::vector<double>> generate_synthetic_prices(int n_days,
                                                           std::uint64_t seed,
                                                           int n_periods = 24);

// Mean of the `lookback` days before `day`.
std::vector<double> price_forecast(const std::vector<std::vector<double>>& prices,
                                   int day, int lookback = 4);

struct CampaignData {
  FleetSpec fleet;
  AvailabilityHistory history;
  std::vector<std::vector<double>> prices;  // realized prices per day
};

struct CampaignConfig {
  int first_day = 28;
  int n_days = 28;
  bool run_df = true;
  bool run_sf = true;
  bool run_hf = true;
  int k_offset = 0;                // added to every K_v whenever feasible
  double feeder_reduction = 0.0;   // fraction of feeder_ref removed
  // Reference feeder rating before the reduction. Zero means 8 kW per EV.
  double feeder_ref = 0.0;
  int window_length = 4;
  int window_step = 7;
  int price_lookback = 4;
  AggregatorParams params;
  // Coupled robust solves (binding feeder) stop at these limits and report
  // the incumbent with its gap.
  double hf_time_limit = 20.0;
  std::int64_t hf_node_limit = 200;
  double hf_rel_gap = 1e-4;
  bool audit = true;
  int threads = 1;

  double feeder_cap(int n_evs) const;
  std::vector<std::string> validate(const CampaignData& data) const;
};

struct ModelDayResult {
  ModelKind kind = ModelKind::kDeterministic;
  std::vector<double> p;
  double objective = 0.0;
  MetricsReport metrics;
  double slack_kwh = 0.0;
  double unmet_kwh = 0.0;
  double feasibility_objective = 0.0;
  std::string solver_status;  // "optimal" or the B&B status
  double mip_gap = 0.0;
  bool audit_passed = true;
  models::RobustAudit audit;
  double max_simultaneous = 0.0;
  std::vector<int> k_used;  // robust only
};

struct DayResult {
  int day = 0;
  std::vector<ModelDayResult> models;
};

// Estimate, solve each selected model, evaluate against the realized day.
// Throws std::runtime_error when a model is infeasible or the solver fails.
DayResult run_day(int day, const CampaignConfig& cfg, const CampaignData& data);

struct CampaignResult {
  std::vector<DayResult> days;
  std::vector<ModelKind> kinds;
  std::vector<MetricsReport> totals;  // aligned with kinds
  bool all_audits_passed = true;
  double wall_seconds = 0.0;

  const MetricsReport* total(ModelKind kind) const;
};

CampaignResult run_campaign(const CampaignConfig& cfg, const CampaignData& data);

// One row per model per day; MetricsReport fields as columns.
void write_summary_csv(const CampaignResult& result, std::ostream& out);
// Fixed-width table with one column per model.
std::string comparison_table(const CampaignResult& result);

// Shortcut used by the robust solve: per-EV decomposition when the feeder
// cannot bind, otherwise one coupled MILP started from a shared-feeder
// heuristic. Returns the full-model column vector.
struct RobustSolve {
  milp::MilpStatus status = milp::MilpStatus::kNumericalFailure;
  double objective = 0.0;
  double gap = 0.0;
  DispatchSolution solution;
};
RobustSolve solve_robust(const FleetSpec& fleet, const std::vector<double>& prices,
                         const std::vector<UncertaintySet>& sets,
                         const AggregatorParams& params, const Horizon& horizon,
                         const CampaignConfig& cfg);

// Shifts K by `offset` and pulls it back toward the estimate until the
// robust model passes its build-time diagnostics.
std::vector<UncertaintySet> shift_k(const FleetSpec& fleet,
                                    std::vector<UncertaintySet> sets, int offset,
                                    const Horizon& horizon);

}  // namespace evagg::harness
