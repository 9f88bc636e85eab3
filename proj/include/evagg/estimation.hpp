#pragma once

#include <vector>

#include "evagg/domain.hpp"

namespace evagg {

// The L most recent same-weekday records of each EV: days[v][l], most
// recent first.
struct HistoryWindow {
  int n_periods = 24;
  std::vector<std::vector<DayRecord>> days;

  int n_evs() const { return static_cast<int>(days.size()); }
  int length() const { return days.empty() ? 0 : static_cast<int>(days[0].size()); }
};

// Checks record lengths, 0/1 availability, nonnegative consumption and
// that consumption only happens while unavailable. Throws
// std::invalid_argument naming the EV, day and period.
void validate_record(const DayRecord& r, int n_periods, int ev, int day);
void validate_history(const AvailabilityHistory& history);

// Records of days target - step, target - 2*step, ... (L of them).
// Throws std::out_of_range when the history is too short.
HistoryWindow select_window(const AvailabilityHistory& history, int target_day,
                            int length = 4, int step = 7);

std::vector<int> estimate_k(const HistoryWindow& window);

struct AvailabilityBounds {
  std::vector<int> a_lo;
  std::vector<int> a_hi;
};
std::vector<AvailabilityBounds> estimate_bounds(const HistoryWindow& window);

// K and bounds together, with the sum(a_hi) >= K check asserted.
std::vector<UncertaintySet> estimate_uncertainty(const HistoryWindow& window);

struct ExpectedProfiles {
  std::vector<std::vector<double>> alpha;  // [v][t] in [0, 1]
  std::vector<std::vector<double>> tau;    // [v][t] kWh
};
ExpectedProfiles expected_profiles(const HistoryWindow& window);

struct ScenarioSet {
  std::vector<double> probability;
  // realized[w][v]: availability and consumption of EV v in scenario w.
  std::vector<std::vector<DayRecord>> realized;

  int size() const { return static_cast<int>(probability.size()); }
};
ScenarioSet build_scenarios(const HistoryWindow& window);

std::vector<double> expected_daily_demand(const HistoryWindow& window);

}  // namespace evagg
