#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "evagg/harness.hpp"

namespace evagg::harness {
namespace {

// -1, 0, +1 with probabilities 0.2, 0.6, 0.2.
int jitter(std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return u < 0.2 ? -1 : (u < 0.8 ? 0 : 1);
}

double round_to(double x, double step) { return std::round(x / step) * step; }

void drive(DayRecord& r, int start, int length, double usable,
           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> kwh(1.0, 6.0);
  const int n = static_cast<int>(r.avail.size());
  for (int t = start; t < std::min(n, start + length); ++t) {
    r.avail[t] = 0;
    r.cons[t] = std::min(round_to(kwh(rng), 0.01), usable);
  }
}

}  // namespace

SyntheticFleet generate_synthetic_fleet(int n_evs, int n_days,
                                        std::uint64_t seed) {
  if (n_evs < 1) throw std::invalid_argument("n_evs must be >= 1");
  if (n_days < 1) throw std::invalid_argument("n_days must be >= 1");
  std::mt19937_64 rng(seed);
  SyntheticFleet out;
  out.history.n_periods = 24;
  out.history.ev_days.resize(n_evs);
  std::uniform_int_distribution<int> depart(5, 9);
  std::uniform_int_distribution<int> trip(1, 4);
  std::uniform_int_distribution<int> evening_start(17, 20);
  std::uniform_int_distribution<int> evening_len(1, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int v = 0; v < n_evs; ++v) {
    EvParams ev;
    char id[16];
    std::snprintf(id, sizeof id, "ev%03d", v);
    ev.id = id;
    ev.e_init = default_e_init(ev);
    out.fleet.push_back(ev);

    const int base_depart = depart(rng);
    const int base_trip = trip(rng);
    const double evening_p = 0.1 + 0.5 * unit(rng);
    for (int d = 0; d < n_days; ++d) {
      DayRecord r;
      r.avail.assign(24, 1);
      r.cons.assign(24, 0.0);
      const bool weekday = d % 7 < 5;
      if (unit(rng) < (weekday ? 0.9 : 0.4)) {
        const int start = std::clamp(base_depart + jitter(rng), 5, 9);
        const int len = std::clamp(base_trip + jitter(rng), 1, 4);
        drive(r, start, len, ev.usable(), rng);
      }
      if (unit(rng) < evening_p) {
        drive(r, evening_start(rng), evening_len(rng), ev.usable(), rng);
      }
      double total = 0.0;
      for (double c : r.cons) total += c;
      if (total > ev.usable()) {
        const double scale = ev.usable() / total;
        for (double& c : r.cons) c = std::floor(c * scale * 100.0) / 100.0;
      }
      out.history.ev_days[v].push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::vector<double>> generate_synthetic_prices(int n_days,
                                                           std::uint64_t seed,
                                                           int n_periods) {
  if (n_days < 1 || n_periods < 1) {
    throw std::invalid_argument("price series needs days and periods");
  }
  // Hourly shape around the daily level, EUR/kWh.
  static const double kShape[24] = {
      -0.010, -0.013, -0.015, -0.016, -0.015, -0.012, -0.005, 0.004,
      0.009,  0.011,  0.010,  0.006,  0.003,  0.000,  -0.003, -0.004,
      -0.002, 0.003,  0.008,  0.012,  0.015,  0.013,  0.006,  -0.004};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> level(0.055, 0.006);
  std::normal_distribution<double> noise(0.0, 0.003);
  std::vector<std::vector<double>> prices(n_days, std::vector<double>(n_periods));
  for (int d = 0; d < n_days; ++d) {
    const double base = std::max(0.02, level(rng));
    for (int t = 0; t < n_periods; ++t) {
      const double shape = kShape[(t * 24 / n_periods) % 24];
      prices[d][t] = round_to(std::max(0.005, base + shape + noise(rng)), 1e-5);
    }
  }
  return prices;
}

std::vector<double> price_forecast(const std::vector<std::vector<double>>& prices,
                                   int day, int lookback) {
  if (lookback < 1) throw std::invalid_argument("lookback must be >= 1");
  if (day < lookback || day > static_cast<int>(prices.size())) {
    throw std::out_of_range("not enough price history before day " +
                            std::to_string(day));
  }
  std::vector<double> out(prices[day - 1].size(), 0.0);
  for (int l = 1; l <= lookback; ++l) {
    const auto& p = prices[day - l];
    if (p.size() != out.size()) {
      throw std::invalid_argument("price days differ in length");
    }
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += p[t];
  }
  for (double& x : out) x /= lookback;
  return out;
}

}  // namespace evagg::harness
