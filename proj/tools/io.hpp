#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evagg/domain.hpp"
#include "evagg/estimation.hpp"

namespace evagg::io {

// Bad input data or options. The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Header plus data rows; lines[i] is the 1-based file line of rows[i].
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;

  // Column index of `name`; throws InputError when required and missing.
  int column(std::string_view name, bool required = true) const;
  // "source:line: " prefix for messages about row i.
  std::string where(std::size_t i) const;
};

CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::string& path);

// Dot-decimal, locale independent. Throws InputError with `where` prefixed.
double parse_double(std::string_view text, const std::string& where);
int parse_int(std::string_view text, const std::string& where);
// Shortest text that reads back to the same double.
std::string format_double(double x);

// Hourly UTC timestamp: days since 1970-01-01 and hour of day.
struct Timestamp {
  std::int64_t day = 0;
  int hour = 0;
};

// Accepts YYYY-MM-DDTHH:MM[:SS] with 'T' or ' ', optionally followed by
// 'Z' or +00:00. Minutes and seconds must be zero.
Timestamp parse_timestamp(std::string_view text, const std::string& where);
std::int64_t parse_date(std::string_view text, const std::string& where);
std::string format_date(std::int64_t day);
std::string format_timestamp(const Timestamp& ts);

// Prices per day for a contiguous run of dates starting at first_day.
struct PriceTable {
  std::int64_t first_day = 0;
  std::vector<std::vector<double>> days;

  // Index of `day` in days, or -1.
  int index(std::int64_t day) const;
};

PriceTable read_prices(const CsvTable& table, int n_periods = 24);
void write_prices(std::ostream& out, const PriceTable& prices);

struct HistoryTable {
  std::int64_t first_day = 0;
  std::vector<std::string> ev_ids;
  AvailabilityHistory history;
};

// Availability must cover every hour of every date from the first to the
// last for every EV. Consumption rows are optional (missing hours are 0)
// and may be null.
HistoryTable read_history(const CsvTable& availability, const CsvTable* consumption,
                          int n_periods = 24);
void write_availability(std::ostream& out, const HistoryTable& h);
void write_consumption(std::ostream& out, const HistoryTable& h);

// Columns: ev_id plus any EvParams field name; absent fields keep their
// defaults and e_init defaults to the middle of the usable window.
FleetSpec read_fleet(const CsvTable& table);
void write_fleet(std::ostream& out, const FleetSpec& fleet);

// Reorders history rows to the fleet order. Throws InputError when the
// id sets differ.
AvailabilityHistory align_history(const HistoryTable& h, const FleetSpec& fleet);

nlohmann::json to_json(const DispatchSolution& sol, const FleetSpec& fleet);
// The committed profile of a `solve` output.
std::vector<double> read_profile(const nlohmann::json& j);

// Uncertainty estimates plus the window they came from.
nlohmann::json estimate_to_json(const HistoryWindow& window,
                                const std::vector<std::string>& ev_ids,
                                const std::string& date);
// Returns the window and fills ev_ids.
HistoryWindow window_from_json(const nlohmann::json& j,
                               std::vector<std::string>& ev_ids);

nlohmann::json to_json(const MetricsReport& m);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace evagg::io
