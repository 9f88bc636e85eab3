#include "evagg/domain.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace evagg {
namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string label(const EvParams& ev, std::size_t index) {
  return "EV " + (ev.id.empty() ? "#" + std::to_string(index) : ev.id) + ": ";
}

}  // namespace

double EvParams::degradation_rate() const {
  return std::abs(slope / 100.0) * batt_cost;
}

double default_e_init(const EvParams& ev) {
  return ev.e_min + 0.5 * (ev.e_max - ev.e_min);
}

int UncertaintySet::sum_hi() const {
  return std::accumulate(a_hi.begin(), a_hi.end(), 0);
}

int UncertaintySet::sum_lo() const {
  return std::accumulate(a_lo.begin(), a_lo.end(), 0);
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDeterministic:
      return "deterministic";
    case ModelKind::kStochastic:
      return "stochastic";
    case ModelKind::kRobust:
      return "robust";
  }
  return "unknown";
}

bool MetricsReport::identity_holds(double tol) const {
  return std::abs(tc_da - (c_da + d_da - r_da)) <= tol;
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& o) {
  tc_da += o.tc_da;
  c_da += o.c_da;
  d_da += o.d_da;
  r_da += o.r_da;
  e_bought += o.e_bought;
  e_sold += o.e_sold;
  s_fp += o.s_fp;
  e_minus_fp += o.e_minus_fp;
  solve_time += o.solve_time;
  return *this;
}

MetricsReport day_ahead_metrics(const std::vector<double>& p,
                                const std::vector<double>& prices,
                                double degradation, const Horizon& horizon) {
  if (p.size() != prices.size()) {
    throw std::invalid_argument("metrics: profile and prices differ in length");
  }
  MetricsReport m;
  const double h = horizon.period_hours;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double bought = std::max(p[t], 0.0) * h;
    const double sold = std::max(-p[t], 0.0) * h;
    m.c_da += prices[t] * bought;
    m.r_da += prices[t] * sold;
    m.e_bought += bought / 1000.0;
    m.e_sold += sold / 1000.0;
  }
  m.d_da = degradation;
  m.tc_da = m.c_da + m.d_da - m.r_da;
  return m;
}

double degradation_cost(const EvParams& ev, double d_kw, double tau_kwh,
                        double period_hours) {
  if (d_kw < 0.0 || tau_kwh < 0.0) {
    throw std::invalid_argument("degradation_cost: negative input");
  }
  return ev.degradation_rate() * (d_kw * period_hours / ev.eta + tau_kwh);
}

std::vector<std::string> validate_horizon(const Horizon& horizon) {
  std::vector<std::string> out;
  if (horizon.n_periods < 1) out.push_back("horizon: n_periods must be >= 1");
  if (!(horizon.period_hours > 0.0)) {
    out.push_back("horizon: period_hours must be positive");
  } else if (horizon.period_hours != std::round(horizon.period_hours)) {
    out.push_back("horizon: period_hours must be a whole number of hours");
  }
  return out;
}

std::vector<std::string> validate_fleet(const FleetSpec& fleet,
                                        const Horizon& horizon) {
  std::vector<std::string> out = validate_horizon(horizon);
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const EvParams& ev = fleet[i];
    const std::string who = label(ev, i);
    if (!(ev.e_min > 0.0)) out.push_back(who + "e_min must be positive");
    if (!(ev.e_min < ev.e_max)) out.push_back(who + "e_min must be below e_max");
    if (ev.e_init < ev.e_min) out.push_back(who + "e_init below e_min");
    if (ev.e_init > ev.e_max) out.push_back(who + "e_init above e_max");
    if (!(ev.eta > 0.0 && ev.eta <= 1.0)) {
      out.push_back(who + "eta outside (0, 1]");
    }
    if (ev.c_max < 0.0) out.push_back(who + "c_max negative");
    if (ev.d_max < 0.0) out.push_back(who + "d_max negative");
    if (ev.batt_cost < 0.0) out.push_back(who + "batt_cost negative");
    if (ev.daily_demand < 0.0) out.push_back(who + "daily_demand negative");
    const double ceiling = (ev.e_max - ev.e_min) * horizon.n_periods;
    if (ev.daily_demand > ceiling + 1e-9) {
      out.push_back(who + "demand exceeds " + fmt_num(ceiling) +
                    " kWh ceiling");
    }
  }
  return out;
}

std::vector<std::string> validate_prices(const std::vector<double>& prices,
                                         const Horizon& horizon) {
  std::vector<std::string> out;
  if (static_cast<int>(prices.size()) != horizon.n_periods) {
    out.push_back("prices: expected " + std::to_string(horizon.n_periods) +
                  " periods, got " + std::to_string(prices.size()));
  }
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!(prices[t] > 0.0)) {
      out.push_back("prices: period " + std::to_string(t) + " has price " +
                    fmt_num(prices[t]) +
                    "; prices must be strictly positive");
    }
  }
  return out;
}

std::vector<std::string> validate_aggregator(const AggregatorParams& params) {
  std::vector<std::string> out;
  if (!(params.feeder_cap > 0.0)) out.push_back("feeder_cap must be positive");
  if (!(params.pen_sale > 0.0)) out.push_back("pen_sale must be positive");
  if (!(params.pen_balance > params.pen_sale)) {
    out.push_back("pen_balance must exceed pen_sale");
  }
  return out;
}

std::vector<std::string> validate_uncertainty(const UncertaintySet& set,
                                              const Horizon& horizon) {
  std::vector<std::string> out;
  const auto n = static_cast<std::size_t>(horizon.n_periods);
  if (set.a_lo.size() != n || set.a_hi.size() != n) {
    out.push_back("uncertainty set: bounds do not span the horizon");
    return out;
  }
  for (std::size_t t = 0; t < n; ++t) {
    const bool binary = (set.a_lo[t] == 0 || set.a_lo[t] == 1) &&
                        (set.a_hi[t] == 0 || set.a_hi[t] == 1);
    if (!binary) {
      out.push_back("uncertainty set: non-binary bound at period " +
                    std::to_string(t));
    } else if (set.a_lo[t] > set.a_hi[t]) {
      out.push_back("uncertainty set: a_lo above a_hi at period " +
                    std::to_string(t));
    }
  }
  if (set.k_min < 0 || set.k_min > horizon.n_periods) {
    out.push_back("uncertainty set: k_min outside [0, n_periods]");
  }
  if (set.sum_hi() < set.k_min) {
    out.push_back("uncertainty set: sum of a_hi below k_min");
  }
  return out;
}

}  // namespace evagg
