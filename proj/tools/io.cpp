#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

namespace evagg::io {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Field {
  const char* name;
  double EvParams::*member;
};

constexpr Field kFleetFields[] = {
    {"c_max", &EvParams::c_max},       {"d_max", &EvParams::d_max},
    {"e_max", &EvParams::e_max},       {"e_min", &EvParams::e_min},
    {"e_init", &EvParams::e_init},     {"eta", &EvParams::eta},
    {"batt_cost", &EvParams::batt_cost}, {"slope", &EvParams::slope},
    {"daily_demand", &EvParams::daily_demand},
};

nlohmann::json schedule_json(const EvSchedule& s) {
  nlohmann::json j{{"c", s.c}, {"d", s.d}, {"e", s.e}, {"s", s.s}, {"cdeg", s.cdeg}};
  if (!s.alpha.empty()) {
    j["alpha"] = s.alpha;
    j["tau"] = s.tau;
    j["zc"] = s.zc;
    j["zd"] = s.zd;
  }
  return j;
}

}  // namespace

int CsvTable::column(std::string_view name, bool required) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<int>(k);
  }
  if (required) {
    throw InputError(source + ":1: missing column '" + std::string(name) + "'");
  }
  return -1;
}

std::string CsvTable::where(std::size_t i) const {
  return source + ":" + std::to_string(lines.at(i)) + ": ";
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InputError(source + ":" + std::to_string(n) + ": expected " +
                       std::to_string(t.header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(n);
  }
  if (t.header.empty()) throw InputError(source + ": empty file");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open");
  return read_csv(in, path);
}

double parse_double(std::string_view text, const std::string& where) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  const char* first = text.data();
  if (first != end && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, end, x);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InputError(where + "not a number: '" + std::string(text) + "'");
  }
  return x;
}

int parse_int(std::string_view text, const std::string& where) {
  int x = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InputError(where + "not an integer: '" + std::string(text) + "'");
  }
  return x;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::int64_t parse_date(std::string_view text, const std::string& where) {
  auto bad = [&] {
    return InputError(where + "bad date '" + std::string(text) +
                      "' (want YYYY-MM-DD)");
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0, m = 0, d = 0;
  try {
    y = parse_int(text.substr(0, 4), where);
    m = parse_int(text.substr(5, 2), where);
    d = parse_int(text.substr(8, 2), where);
  } catch (const InputError&) {
    throw bad();
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y),
                                        std::chrono::month(m),
                                        std::chrono::day(d)};
  if (!ymd.ok()) throw bad();
  return std::chrono::sys_days(ymd).time_since_epoch().count();
}

Timestamp parse_timestamp(std::string_view text, const std::string& where) {
  auto bad = [&](const char* why) {
    return InputError(where + "bad timestamp '" + std::string(text) + "': " + why);
  };
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw bad("want YYYY-MM-DDTHH:MM");
  }
  Timestamp ts;
  ts.day = parse_date(text.substr(0, 10), where);
  int minute = 0, second = 0;
  try {
    ts.hour = parse_int(text.substr(11, 2), where);
    minute = parse_int(text.substr(14, 2), where);
    std::string_view rest = text.substr(16);
    if (!rest.empty() && rest[0] == ':') {
      if (rest.size() < 3) throw bad("truncated seconds");
      second = parse_int(rest.substr(1, 2), where);
      rest = rest.substr(3);
    }
    if (!rest.empty() && rest != "Z" && rest != "+00:00") {
      throw bad("only UTC offsets are accepted");
    }
  } catch (const InputError& e) {
    if (std::string_view(e.what()).find("bad timestamp") != std::string_view::npos) throw;
    throw bad("want YYYY-MM-DDTHH:MM");
  }
  if (ts.hour < 0 || ts.hour > 23) throw bad("hour out of range");
  if (minute != 0 || second != 0) throw bad("timestamps must be on the hour");
  return ts;
}

std::string format_date(std::int64_t day) {
  const std::chrono::year_month_day ymd{
      std::chrono::sys_days(std::chrono::days(day))};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(const Timestamp& ts) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d:00", ts.hour);
  return format_date(ts.day) + buf;
}

int PriceTable::index(std::int64_t day) const {
  const std::int64_t k = day - first_day;
  if (k < 0 || k >= static_cast<std::int64_t>(days.size())) return -1;
  return static_cast<int>(k);
}

PriceTable read_prices(const CsvTable& table, int n_periods) {
  const int c_ts = table.column("timestamp");
  const int c_p = table.column("eur_per_kwh");
  if (table.rows.empty()) throw InputError(table.source + ": no price rows");
  std::map<std::int64_t, std::vector<double>> by_day;
  std::map<std::int64_t, std::vector<char>> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string w = table.where(i);
    const Timestamp ts = parse_timestamp(table.rows[i][c_ts], w);
    const double price = parse_double(table.rows[i][c_p], w);
    if (!(price > 0.0)) {
      throw InputError(w + "price " + table.rows[i][c_p] +
                       " rejected; prices must be strictly positive");
    }
    if (ts.hour >= n_periods) throw InputError(w + "hour beyond the horizon");
    auto& day = by_day[ts.day];
    auto& mark = seen[ts.day];
    day.resize(n_periods, 0.0);
    mark.resize(n_periods, 0);
    if (mark[ts.hour]) throw InputError(w + "duplicate timestamp");
    mark[ts.hour] = 1;
    day[ts.hour] = price;
  }
  PriceTable out;
  out.first_day = by_day.begin()->first;
  std::int64_t expect = out.first_day;
  for (const auto& [day, values] : by_day) {
    if (day != expect) {
      throw InputError(table.source + ": no prices for " + format_date(expect));
    }
    const auto& mark = seen[day];
    for (int t = 0; t < n_periods; ++t) {
      if (!mark[t]) {
        throw InputError(table.source + ": missing price for " +
                         format_timestamp({day, t}));
      }
    }
    out.days.push_back(values);
    ++expect;
  }
  return out;
}

void write_prices(std::ostream& out, const PriceTable& prices) {
  out << "timestamp,eur_per_kwh\n";
  for (std::size_t d = 0; d < prices.days.size(); ++d) {
    for (std::size_t t = 0; t < prices.days[d].size(); ++t) {
      out << format_timestamp({prices.first_day + static_cast<std::int64_t>(d),
                               static_cast<int>(t)})
          << ',' << format_double(prices.days[d][t]) << '\n';
    }
  }
}

HistoryTable read_history(const CsvTable& availability, const CsvTable* consumption,
                          int n_periods) {
  const int c_id = availability.column("ev_id");
  const int c_ts = availability.column("timestamp");
  const int c_a = availability.column("avail");
  if (availability.rows.empty()) {
    throw InputError(availability.source + ": no availability rows");
  }
  std::map<std::string, int> ev_index;
  HistoryTable out;
  std::int64_t lo = 0, hi = 0;
  std::vector<std::pair<int, Timestamp>> keys(availability.rows.size());
  std::vector<int> values(availability.rows.size());
  for (std::size_t i = 0; i < availability.rows.size(); ++i) {
    const auto& row = availability.rows[i];
    const std::string w = availability.where(i);
    if (row[c_id].empty()) throw InputError(w + "empty ev_id");
    auto [it, fresh] = ev_index.emplace(row[c_id], static_cast<int>(out.ev_ids.size()));
    if (fresh) out.ev_ids.push_back(row[c_id]);
    const Timestamp ts = parse_timestamp(row[c_ts], w);
    if (ts.hour >= n_periods) throw InputError(w + "hour beyond the horizon");
    const int a = parse_int(row[c_a], w);
    if (a != 0 && a != 1) throw InputError(w + "avail must be 0 or 1");
    keys[i] = {it->second, ts};
    values[i] = a;
    if (i == 0 || ts.day < lo) lo = ts.day;
    if (i == 0 || ts.day > hi) hi = ts.day;
  }
  const int n_days = static_cast<int>(hi - lo + 1);
  const int n_v = static_cast<int>(out.ev_ids.size());
  out.first_day = lo;
  out.history.n_periods = n_periods;
  out.history.ev_days.assign(
      n_v, std::vector<DayRecord>(n_days, DayRecord{std::vector<int>(n_periods, -1),
                                                    std::vector<double>(n_periods, 0.0)}));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& [v, ts] = keys[i];
    int& slot = out.history.ev_days[v][ts.day - lo].avail[ts.hour];
    if (slot >= 0) throw InputError(availability.where(i) + "duplicate (ev_id, timestamp)");
    slot = values[i];
  }
  for (int v = 0; v < n_v; ++v) {
    for (int d = 0; d < n_days; ++d) {
      for (int t = 0; t < n_periods; ++t) {
        if (out.history.ev_days[v][d].avail[t] < 0) {
          throw InputError(availability.source + ": no availability for " +
                           out.ev_ids[v] + " at " + format_timestamp({lo + d, t}));
        }
      }
    }
  }
  if (consumption != nullptr) {
    const int k_id = consumption->column("ev_id");
    const int k_ts = consumption->column("timestamp");
    const int k_kwh = consumption->column("kwh");
    std::vector<std::vector<std::vector<char>>> seen(
        n_v, std::vector<std::vector<char>>(n_days, std::vector<char>(n_periods, 0)));
    for (std::size_t i = 0; i < consumption->rows.size(); ++i) {
      const auto& row = consumption->rows[i];
      const std::string w = consumption->where(i);
      const auto it = ev_index.find(row[k_id]);
      if (it == ev_index.end()) {
        throw InputError(w + "ev_id '" + row[k_id] + "' has no availability rows");
      }
      const Timestamp ts = parse_timestamp(row[k_ts], w);
      if (ts.day < lo || ts.day > hi || ts.hour >= n_periods) {
        throw InputError(w + "timestamp outside the availability range");
      }
      const double kwh = parse_double(row[k_kwh], w);
      if (!(kwh >= 0.0)) throw InputError(w + "kwh must be nonnegative");
      const int d = static_cast<int>(ts.day - lo);
      char& mark = seen[it->second][d][ts.hour];
      if (mark) throw InputError(w + "duplicate (ev_id, timestamp)");
      mark = 1;
      DayRecord& r = out.history.ev_days[it->second][d];
      if (kwh > 0.0 && r.avail[ts.hour] == 1) {
        throw InputError(w + "consumption while the EV is plugged in");
      }
      r.cons[ts.hour] = kwh;
    }
  }
  return out;
}

void write_availability(std::ostream& out, const HistoryTable& h) {
  out << "ev_id,timestamp,avail\n";
  for (int v = 0; v < h.history.n_evs(); ++v) {
    for (int d = 0; d < h.history.n_days(); ++d) {
      const DayRecord& r = h.history.ev_days[v][d];
      for (int t = 0; t < h.history.n_periods; ++t) {
        out << h.ev_ids[v] << ',' << format_timestamp({h.first_day + d, t}) << ','
            << r.avail[t] << '\n';
      }
    }
  }
}

void write_consumption(std::ostream& out, const HistoryTable& h) {
  out << "ev_id,timestamp,kwh\n";
  for (int v = 0; v < h.history.n_evs(); ++v) {
    for (int d = 0; d < h.history.n_days(); ++d) {
      const DayRecord& r = h.history.ev_days[v][d];
      for (int t = 0; t < h.history.n_periods; ++t) {
        if (r.cons[t] == 0.0) continue;
        out << h.ev_ids[v] << ',' << format_timestamp({h.first_day + d, t}) << ','
            << format_double(r.cons[t]) << '\n';
      }
    }
  }
}

FleetSpec read_fleet(const CsvTable& table) {
  const int c_id = table.column("ev_id");
  for (const std::string& name : table.header) {
    const bool known =
        name == "ev_id" || std::any_of(std::begin(kFleetFields), std::end(kFleetFields),
                                       [&](const Field& f) { return name == f.name; });
    if (!known) throw InputError(table.source + ":1: unknown column '" + name + "'");
  }
  const int c_init = table.column("e_init", false);
  FleetSpec fleet;
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string w = table.where(i);
    EvParams ev;
    ev.id = row[c_id];
    if (ev.id.empty()) throw InputError(w + "empty ev_id");
    if (!ids.emplace(ev.id, 0).second) throw InputError(w + "duplicate ev_id " + ev.id);
    for (const Field& f : kFleetFields) {
      const int c = table.column(f.name, false);
      if (c >= 0 && !row[c].empty()) ev.*f.member = parse_double(row[c], w);
    }
    if (c_init < 0 || row[c_init].empty()) ev.e_init = default_e_init(ev);
    fleet.push_back(ev);
  }
  if (fleet.empty()) throw InputError(table.source + ": no EV rows");
  return fleet;
}

void write_fleet(std::ostream& out, const FleetSpec& fleet) {
  out << "ev_id";
  for (const Field& f : kFleetFields) out << ',' << f.name;
  out << '\n';
  for (const EvParams& ev : fleet) {
    out << ev.id;
    for (const Field& f : kFleetFields) out << ',' << format_double(ev.*f.member);
    out << '\n';
  }
}

AvailabilityHistory align_history(const HistoryTable& h, const FleetSpec& fleet) {
  std::map<std::string, int> row;
  for (std::size_t v = 0; v < h.ev_ids.size(); ++v) row[h.ev_ids[v]] = static_cast<int>(v);
  if (row.size() != fleet.size()) {
    throw InputError("history has " + std::to_string(row.size()) +
                     " EVs but the fleet has " + std::to_string(fleet.size()));
  }
  AvailabilityHistory out;
  out.n_periods = h.history.n_periods;
  for (const EvParams& ev : fleet) {
    const auto it = row.find(ev.id);
    if (it == row.end()) throw InputError("no history for EV " + ev.id);
    out.ev_days.push_back(h.history.ev_days[it->second]);
  }
  return out;
}

nlohmann::json to_json(const DispatchSolution& sol, const FleetSpec& fleet) {
  nlohmann::json j;
  j["model"] = to_string(sol.kind);
  j["objective"] = sol.objective;
  j["p"] = sol.p;
  nlohmann::json evs = nlohmann::json::array();
  for (std::size_t v = 0; v < sol.evs.size(); ++v) {
    nlohmann::json e = schedule_json(sol.evs[v]);
    e["id"] = fleet.at(v).id;
    if (v < sol.duals.size()) {
      const LowerLevelDuals& d = sol.duals[v];
      e["duals"] = {{"zeta_drain", d.zeta_drain},
                    {"beta_lo_drain", d.beta_lo_drain},
                    {"beta_hi_drain", d.beta_hi_drain},
                    {"zeta_interaction", d.zeta_interaction},
                    {"beta_lo_interaction", d.beta_lo_interaction},
                    {"beta_hi_interaction", d.beta_hi_interaction}};
    }
    evs.push_back(std::move(e));
  }
  j["evs"] = std::move(evs);
  if (!sol.scenarios.empty()) {
    j["probabilities"] = sol.probabilities;
    nlohmann::json sc = nlohmann::json::array();
    for (const auto& w : sol.scenarios) {
      nlohmann::json one = nlohmann::json::array();
      for (const EvSchedule& s : w) one.push_back(schedule_json(s));
      sc.push_back(std::move(one));
    }
    j["scenarios"] = std::move(sc);
  }
  return j;
}

std::vector<double> read_profile(const nlohmann::json& j) {
  if (!j.contains("p") || !j["p"].is_array()) {
    throw InputError("solution JSON has no 'p' array");
  }
  std::vector<double> p;
  for (const auto& x : j["p"]) {
    if (!x.is_number()) throw InputError("solution JSON: non-numeric entry in 'p'");
    p.push_back(x.get<double>());
  }
  return p;
}

nlohmann::json estimate_to_json(const HistoryWindow& window,
                                const std::vector<std::string>& ev_ids,
                                const std::string& date) {
  const std::vector<UncertaintySet> sets = estimate_uncertainty(window);
  const ExpectedProfiles e = expected_profiles(window);
  const std::vector<double> demand = expected_daily_demand(window);
  nlohmann::json j;
  j["date"] = date;
  j["n_periods"] = window.n_periods;
  nlohmann::json evs = nlohmann::json::array();
  for (int v = 0; v < window.n_evs(); ++v) {
    nlohmann::json days = nlohmann::json::array();
    for (const DayRecord& r : window.days[v]) {
      days.push_back({{"avail", r.avail}, {"cons", r.cons}});
    }
    evs.push_back({{"id", ev_ids.at(v)},
                   {"k_min", sets[v].k_min},
                   {"a_lo", sets[v].a_lo},
                   {"a_hi", sets[v].a_hi},
                   {"alpha_hat", e.alpha[v]},
                   {"tau_hat", e.tau[v]},
                   {"daily_demand", demand[v]},
                   {"window", std::move(days)}});
  }
  j["evs"] = std::move(evs);
  return j;
}

HistoryWindow window_from_json(const nlohmann::json& j,
                               std::vector<std::string>& ev_ids) {
  HistoryWindow w;
  try {
    w.n_periods = j.at("n_periods").get<int>();
    ev_ids.clear();
    for (const auto& ev : j.at("evs")) {
      ev_ids.push_back(ev.at("id").get<std::string>());
      std::vector<DayRecord> days;
      for (const auto& d : ev.at("window")) {
        DayRecord r;
        r.avail = d.at("avail").get<std::vector<int>>();
        r.cons = d.at("cons").get<std::vector<double>>();
        days.push_back(std::move(r));
      }
      w.days.push_back(std::move(days));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("estimate JSON: ") + e.what());
  }
  if (w.days.empty()) throw InputError("estimate JSON lists no EVs");
  for (int v = 0; v < w.n_evs(); ++v) {
    if (static_cast<int>(w.days[v].size()) != w.length() || w.length() == 0) {
      throw InputError("estimate JSON: ragged window for " + ev_ids[v]);
    }
    for (int l = 0; l < w.length(); ++l) {
      try {
        validate_record(w.days[v][l], w.n_periods, v, l);
      } catch (const std::invalid_argument& e) {
        throw InputError(std::string("estimate JSON: ") + e.what());
      }
    }
  }
  return w;
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"tc_da", m.tc_da},       {"c_da", m.c_da},     {"d_da", m.d_da},
          {"r_da", m.r_da},         {"e_bought_mwh", m.e_bought},
          {"e_sold_mwh", m.e_sold}, {"s_fp_mwh", m.s_fp},
          {"e_minus_fp_mwh", m.e_minus_fp}, {"solve_time_s", m.solve_time}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace evagg::io
