#include "evagg/estimation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace evagg {
namespace {

void require_non_empty(const HistoryWindow& w) {
  if (w.n_evs() == 0 || w.length() == 0) {
    throw std::invalid_argument("history window is empty");
  }
}

}  // namespace

void validate_record(const DayRecord& r, int n_periods, int ev, int day) {
  const std::string where =
      "EV " + std::to_string(ev) + ", day " + std::to_string(day);
  if (static_cast<int>(r.avail.size()) != n_periods ||
      static_cast<int>(r.cons.size()) != n_periods) {
    throw std::invalid_argument(where + ": record does not span " +
                                std::to_string(n_periods) + " periods");
  }
  for (int t = 0; t < n_periods; ++t) {
    if (r.avail[t] != 0 && r.avail[t] != 1) {
      throw std::invalid_argument(where + ", period " + std::to_string(t) +
                                  ": availability must be 0 or 1");
    }
    if (!(r.cons[t] >= 0.0) || !std::isfinite(r.cons[t])) {
      throw std::invalid_argument(where + ", period " + std::to_string(t) +
                                  ": consumption must be a nonnegative number");
    }
    if (r.cons[t] > 0.0 && r.avail[t] == 1) {
      throw std::invalid_argument(where + ", period " + std::to_string(t) +
                                  ": consumption while available");
    }
  }
}

void validate_history(const AvailabilityHistory& history) {
  for (int v = 0; v < history.n_evs(); ++v) {
    if (static_cast<int>(history.ev_days[v].size()) != history.n_days()) {
      throw std::invalid_argument("EV " + std::to_string(v) +
                                  ": day count differs from EV 0");
    }
    for (int d = 0; d < history.n_days(); ++d) {
      validate_record(history.ev_days[v][d], history.n_periods, v, d);
    }
  }
}

HistoryWindow select_window(const AvailabilityHistory& history, int target_day,
                            int length, int step) {
  if (length < 1 || step < 1) {
    throw std::invalid_argument("window length and step must be >= 1");
  }
  if (target_day - length * step < 0) {
    throw std::out_of_range("day " + std::to_string(target_day) +
                            " lacks " + std::to_string(length) +
                            " prior same-weekday records");
  }
  HistoryWindow w;
  w.n_periods = history.n_periods;
  w.days.resize(history.n_evs());
  for (int v = 0; v < history.n_evs(); ++v) {
    for (int l = 1; l <= length; ++l) {
      w.days[v].push_back(history.ev_days[v].at(target_day - l * step));
    }
  }
  return w;
}

std::vector<int> estimate_k(const HistoryWindow& window) {
  require_non_empty(window);
  std::vector<int> k(window.n_evs());
  for (int v = 0; v < window.n_evs(); ++v) {
    long total = 0;
    for (const DayRecord& r : window.days[v]) {
      for (int a : r.avail) total += a;
    }
    // Integer floor division; totals are nonnegative.
    k[v] = static_cast<int>(total / window.length());
  }
  return k;
}

std::vector<AvailabilityBounds> estimate_bounds(const HistoryWindow& window) {
  require_non_empty(window);
  std::vector<AvailabilityBounds> out(window.n_evs());
  for (int v = 0; v < window.n_evs(); ++v) {
    out[v].a_lo.assign(window.n_periods, 1);
    out[v].a_hi.assign(window.n_periods, 1);
    for (int t = 0; t < window.n_periods; ++t) {
      int all = 1;
      int none = 1;
      for (const DayRecord& r : window.days[v]) {
        all *= r.avail[t];
        none *= 1 - r.avail[t];
      }
      out[v].a_lo[t] = all;
      out[v].a_hi[t] = 1 - none;
    }
  }
  return out;
}

std::vector<UncertaintySet> estimate_uncertainty(const HistoryWindow& window) {
  const std::vector<int> k = estimate_k(window);
  const std::vector<AvailabilityBounds> b = estimate_bounds(window);
  std::vector<UncertaintySet> out(window.n_evs());
  for (int v = 0; v < window.n_evs(); ++v) {
    out[v].k_min = k[v];
    out[v].a_lo = b[v].a_lo;
    out[v].a_hi = b[v].a_hi;
    if (out[v].sum_hi() < out[v].k_min) {
      throw std::logic_error("estimated K exceeds available hours for EV " +
                             std::to_string(v));
    }
  }
  return out;
}

ExpectedProfiles expected_profiles(const HistoryWindow& window) {
  require_non_empty(window);
  ExpectedProfiles out;
  const double inv = 1.0 / window.length();
  out.alpha.assign(window.n_evs(), std::vector<double>(window.n_periods, 0.0));
  out.tau.assign(window.n_evs(), std::vector<double>(window.n_periods, 0.0));
  for (int v = 0; v < window.n_evs(); ++v) {
    for (int t = 0; t < window.n_periods; ++t) {
      double a = 0.0;
      double c = 0.0;
      for (const DayRecord& r : window.days[v]) {
        a += r.avail[t];
        c += r.cons[t];
      }
      out.alpha[v][t] = a * inv;
      out.tau[v][t] = c * inv;
    }
  }
  return out;
}

ScenarioSet build_scenarios(const HistoryWindow& window) {
  require_non_empty(window);
  ScenarioSet s;
  const int n = window.length();
  s.probability.assign(n, 1.0 / n);
  s.realized.assign(n, std::vector<DayRecord>(window.n_evs()));
  for (int w = 0; w < n; ++w) {
    for (int v = 0; v < window.n_evs(); ++v) {
      s.realized[w][v] = window.days[v][w];
    }
  }
  return s;
}

std::vector<double> expected_daily_demand(const HistoryWindow& window) {
  require_non_empty(window);
  std::vector<double> out(window.n_evs(), 0.0);
  for (int v = 0; v < window.n_evs(); ++v) {
    double total = 0.0;
    for (const DayRecord& r : window.days[v]) {
      for (double c : r.cons) total += c;
    }
    out[v] = total / window.length();
  }
  return out;
}

}  // namespace evagg
