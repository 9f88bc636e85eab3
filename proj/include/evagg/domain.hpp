#pragma once

#include <string>
#include <vector>

namespace evagg {

struct Horizon {
  int n_periods = 24;
  double period_hours = 1.0;
};

struct EvParams {
  std::string id;
  double c_max = 7.4;       // kW
  double d_max = 7.4;       // kW
  double e_max = 51.1;      // kWh
  double e_min = 10.0;      // kWh
  double e_init = 30.55;    // kWh
  double eta = 0.95;
  double batt_cost = 70.0;  // EUR/kWh
  double slope = -0.015625;
  double daily_demand = 0.0;  // kWh

  double usable() const { return e_max - e_min; }
  // EUR per kWh of chemical energy cycled.
  double degradation_rate() const;
};

using FleetSpec = std::vector<EvParams>;

// Default starting energy: the middle of the usable window.
double default_e_init(const EvParams& ev);

struct AggregatorParams {
  double feeder_cap = 8000.0;   // kW
  double pen_balance = 2000.0;  // EUR/kWh, battery slack
  double pen_sale = 1000.0;     // EUR/kWh, unmet sale
};

// One EV on one day: availability flags and kWh consumed per period.
struct DayRecord {
  std::vector<int> avail;
  std::vector<double> cons;
};

// history[v][d] for EV v on day d.
struct AvailabilityHistory {
  int n_periods = 24;
  std::vector<std::vector<DayRecord>> ev_days;

  int n_evs() const { return static_cast<int>(ev_days.size()); }
  int n_days() const { return ev_days.empty() ? 0 : static_cast<int>(ev_days[0].size()); }
};

struct UncertaintySet {
  int k_min = 0;
  std::vector<int> a_lo;
  std::vector<int> a_hi;

  int sum_hi() const;
  int sum_lo() const;
};

enum class ModelKind { kDeterministic, kStochastic, kRobust };

const char* to_string(ModelKind kind);

struct EvSchedule {
  std::vector<double> c, d, e, s, cdeg;
  // Robust model only.
  std::vector<double> tau, zc, zd;
  std::vector<int> alpha;
};

// Duals of the two lower-level problems, carried as robust-model variables.
struct LowerLevelDuals {
  double zeta_drain = 0.0;
  std::vector<double> beta_lo_drain, beta_hi_drain;
  double zeta_interaction = 0.0;
  std::vector<double> beta_lo_interaction, beta_hi_interaction;
};

struct DispatchSolution {
  ModelKind kind = ModelKind::kDeterministic;
  std::vector<double> p;
  // Deterministic/robust: one schedule per EV. Stochastic: scenario 0.
  std::vector<EvSchedule> evs;
  std::vector<LowerLevelDuals> duals;              // robust only
  std::vector<std::vector<EvSchedule>> scenarios;  // stochastic: [w][v]
  std::vector<double> probabilities;               // stochastic only
  double objective = 0.0;
};

struct MetricsReport {
  double tc_da = 0.0;
  double c_da = 0.0;
  double d_da = 0.0;
  double r_da = 0.0;
  double e_bought = 0.0;  // MWh
  double e_sold = 0.0;    // MWh
  double s_fp = 0.0;      // MWh
  double e_minus_fp = 0.0;  // MWh
  double solve_time = 0.0;  // s

  // |tc - (c + d - r)| within tol EUR.
  bool identity_holds(double tol = 1e-6) const;
  MetricsReport& operator+=(const MetricsReport& o);
};

// Day-ahead metrics from a committed profile p (kW per period), prices
// (EUR/kWh) and the planned degradation cost.
MetricsReport day_ahead_metrics(const std::vector<double>& p,
                                const std::vector<double>& prices,
                                double degradation, const Horizon& horizon);

// EUR for discharging d_kw for one period and consuming tau_kwh.
double degradation_cost(const EvParams& ev, double d_kw, double tau_kwh,
                        double period_hours = 1.0);

// Every violated fleet invariant, one message per violation.
std::vector<std::string> validate_fleet(const FleetSpec& fleet,
                                        const Horizon& horizon);
std::vector<std::string> validate_prices(const std::vector<double>& prices,
                                         const Horizon& horizon);
std::vector<std::string> validate_aggregator(const AggregatorParams& params);
std::vector<std::string> validate_uncertainty(const UncertaintySet& set,
                                              const Horizon& horizon);
std::vector<std::string> validate_horizon(const Horizon& horizon);

}  // namespace evagg
