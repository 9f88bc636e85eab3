// evagg: day-ahead dispatch of an EV fleet from the command line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "evagg/estimation.hpp"
#include "evagg/harness.hpp"
#include "evagg/milp.hpp"
#include "evagg/models.hpp"
#include "io.hpp"

namespace {

using namespace evagg;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;

// A model or solver that did not produce a usable answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string fleet, prices, availability, consumption;
  std::optional<std::uint64_t> synthetic;
  int synthetic_evs = 100;
  int synthetic_days = 56;
  std::string start_date = "2018-01-01";
  std::string out = ".";
  std::string date;

  std::optional<double> feeder_cap;
  double feeder_ref = 0.0;
  double feeder_reduction = 0.0;
  double pen_balance = AggregatorParams{}.pen_balance;
  double pen_sale = AggregatorParams{}.pen_sale;
  int window_length = 4;
  int window_step = 7;
  int price_lookback = 4;
  int k_offset = 0;
  double hf_time_limit = 20.0;
  std::int64_t hf_node_limit = 200;
  int threads = 1;

  // solve
  std::string model;
  std::string estimate;
  std::string export_lp;
  // evaluate
  std::string solution;
  // simulate
  std::vector<std::string> models{"df", "sf", "hf"};
  int first_day = 28;
  int n_days = 28;
};

struct Data {
  FleetSpec fleet;
  io::HistoryTable history;  // rows in fleet order
  io::PriceTable prices;
  bool has_history = false;
  bool has_prices = false;
};

void require(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg;
  for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
  throw io::InputError(msg);
}

Data load(const Options& o, bool need_history, bool need_prices) {
  Data d;
  if (o.synthetic) {
    if (!o.fleet.empty() || !o.prices.empty() || !o.availability.empty() ||
        !o.consumption.empty()) {
      throw io::InputError("--synthetic excludes the CSV inputs");
    }
    const auto sf =
        harness::generate_synthetic_fleet(o.synthetic_evs, o.synthetic_days, *o.synthetic);
    d.fleet = sf.fleet;
    d.history.first_day = io::parse_date(o.start_date, "--start-date: ");
    for (const auto& ev : d.fleet) d.history.ev_ids.push_back(ev.id);
    d.history.history = sf.history;
    d.prices.first_day = d.history.first_day;
    d.prices.days = harness::generate_synthetic_prices(o.synthetic_days, *o.synthetic);
    d.has_history = d.has_prices = true;
    return d;
  }
  if (o.fleet.empty()) throw io::InputError("--fleet or --synthetic is required");
  d.fleet = io::read_fleet(io::read_csv_file(o.fleet));
  if (!o.availability.empty()) {
    const io::CsvTable a = io::read_csv_file(o.availability);
    std::optional<io::CsvTable> c;
    if (!o.consumption.empty()) c = io::read_csv_file(o.consumption);
    const io::HistoryTable h = io::read_history(a, c ? &*c : nullptr);
    d.history.first_day = h.first_day;
    d.history.history = io::align_history(h, d.fleet);
    for (const auto& ev : d.fleet) d.history.ev_ids.push_back(ev.id);
    d.has_history = true;
  } else if (!o.consumption.empty()) {
    throw io::InputError("--consumption needs --availability");
  }
  if (!o.prices.empty()) {
    d.prices = io::read_prices(io::read_csv_file(o.prices));
    d.has_prices = true;
  }
  if (need_history && !d.has_history) throw io::InputError("--availability is required");
  if (need_prices && !d.has_prices) throw io::InputError("--prices is required");
  return d;
}

std::int64_t target_date(const Options& o, const Data& d) {
  if (!o.date.empty()) return io::parse_date(o.date, "--date: ");
  if (!d.has_history) throw io::InputError("--date is required");
  return d.history.first_day + d.history.history.n_days();
}

int history_index(const Data& d, std::int64_t date) {
  const std::int64_t k = date - d.history.first_day;
  if (k < 0 || k > d.history.history.n_days()) {
    throw io::InputError(io::format_date(date) + " is outside the history");
  }
  return static_cast<int>(k);
}

// The day's own prices when the file has them, else the mean of the
// preceding days.
std::vector<double> day_prices(const Options& o, const Data& d, std::int64_t date) {
  const int k = d.prices.index(date);
  if (k >= 0) return d.prices.days[k];
  const std::int64_t rel = date - d.prices.first_day;
  if (rel < o.price_lookback || rel > static_cast<std::int64_t>(d.prices.days.size())) {
    throw io::InputError("no prices for " + io::format_date(date) +
                         " and too few preceding days to forecast them");
  }
  return harness::price_forecast(d.prices.days, static_cast<int>(rel), o.price_lookback);
}

harness::CampaignConfig campaign_config(const Options& o) {
  harness::CampaignConfig c;
  c.feeder_ref = o.feeder_ref;
  c.feeder_reduction = o.feeder_reduction;
  c.window_length = o.window_length;
  c.window_step = o.window_step;
  c.price_lookback = o.price_lookback;
  c.k_offset = o.k_offset;
  c.hf_time_limit = o.hf_time_limit;
  c.hf_node_limit = o.hf_node_limit;
  c.threads = o.threads;
  c.params.pen_balance = o.pen_balance;
  c.params.pen_sale = o.pen_sale;
  c.first_day = o.first_day;
  c.n_days = o.n_days;
  return c;
}

AggregatorParams aggregator(const Options& o, int n_evs) {
  const harness::CampaignConfig c = campaign_config(o);
  AggregatorParams p = c.params;
  p.feeder_cap = o.feeder_cap ? *o.feeder_cap : c.feeder_cap(n_evs);
  if (!(o.feeder_reduction >= 0.0 && o.feeder_reduction < 1.0)) {
    throw io::InputError("feeder reduction must lie in [0, 1)");
  }
  require(validate_aggregator(p));
  return p;
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  io::write_text_file(path.string(), j.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

double planned_degradation(const std::vector<EvSchedule>& evs) {
  double total = 0.0;
  for (const auto& s : evs) {
    for (double c : s.cdeg) total += c;
  }
  return total;
}

HistoryWindow window_for(const Options& o, const Data& d, std::int64_t date) {
  if (o.window_length < 1 || o.window_step < 1) {
    throw io::InputError("window length and step must be >= 1");
  }
  try {
    return select_window(d.history.history, history_index(d, date), o.window_length,
                         o.window_step);
  } catch (const std::out_of_range& e) {
    throw io::InputError(e.what());
  }
}

int cmd_estimate(const Options& o) {
  const Data d = load(o, true, false);
  const std::int64_t date = target_date(o, d);
  const HistoryWindow w = window_for(o, d, date);
  const std::string day = io::format_date(date);
  write_json(out_path(o, "estimate_" + day + ".json"),
             io::estimate_to_json(w, d.history.ev_ids, day));
  return kExitOk;
}

lp::LpSolution solve_lp_checked(const lp::LinearModel& model) {
  lp::LpSolution s = lp::solve_lp(model);
  if (s.status != lp::LpStatus::kOptimal) {
    throw SolverError(std::string("LP solve ended ") + std::string(lp::to_string(s.status)));
  }
  return s;
}

int cmd_solve(const Options& o) {
  ModelKind kind;
  if (o.model == "df") kind = ModelKind::kDeterministic;
  else if (o.model == "sf") kind = ModelKind::kStochastic;
  else if (o.model == "hf") kind = ModelKind::kRobust;
  else throw io::InputError("--model must be df, sf or hf");

  const bool from_estimate = !o.estimate.empty();
  const Data d = load(o, !from_estimate, true);
  FleetSpec fleet = d.fleet;
  const Horizon horizon{24, 1.0};
  std::int64_t date = 0;
  HistoryWindow window;
  if (from_estimate) {
    const nlohmann::json j = io::read_json_file(o.estimate);
    std::vector<std::string> ids;
    window = io::window_from_json(j, ids);
    if (ids.size() != fleet.size()) throw io::InputError("estimate and fleet differ in EV count");
    for (std::size_t v = 0; v < ids.size(); ++v) {
      if (ids[v] != fleet[v].id) {
        throw io::InputError("estimate EV " + ids[v] + " does not match fleet EV " +
                             fleet[v].id);
      }
    }
    date = o.date.empty() ? io::parse_date(j.value("date", ""), o.estimate + ": date: ")
                          : io::parse_date(o.date, "--date: ");
  } else {
    date = target_date(o, d);
    window = window_for(o, d, date);
  }
  const std::vector<double> prices = day_prices(o, d, date);
  require(validate_fleet(fleet, horizon));
  require(validate_prices(prices, horizon));
  const AggregatorParams params = aggregator(o, static_cast<int>(fleet.size()));

  std::optional<models::ModelArtifacts> art;
  std::vector<UncertaintySet> sets;
  if (kind == ModelKind::kDeterministic) {
    const ExpectedProfiles e = expected_profiles(window);
    art = models::build_deterministic(fleet, prices, e.alpha, e.tau, params, horizon);
  } else if (kind == ModelKind::kStochastic) {
    art = models::build_stochastic(fleet, prices, build_scenarios(window), params, horizon);
  } else {
    const std::vector<double> demand = expected_daily_demand(window);
    for (std::size_t v = 0; v < fleet.size(); ++v) fleet[v].daily_demand = demand[v];
    sets = harness::shift_k(fleet, estimate_uncertainty(window), o.k_offset, horizon);
    require(models::robust_diagnostics(fleet, sets, horizon));
    if (!o.export_lp.empty()) {
      art = models::build_robust_milp(fleet, prices, sets, params, horizon);
    }
  }

  if (!o.export_lp.empty()) {
    milp::export_lp_file(art->model, o.export_lp);
    std::cout << "wrote " << o.export_lp << "\n";
    return kExitOk;
  }

  DispatchSolution sol;
  std::string status = "optimal";
  double gap = 0.0;
  if (art) {
    const lp::LpSolution s = solve_lp_checked(art->model);
    sol = models::decode(*art, s.x, fleet, params);
  } else {
    harness::CampaignConfig cfg = campaign_config(o);
    const harness::RobustSolve rs =
        harness::solve_robust(fleet, prices, sets, params, horizon, cfg);
    sol = rs.solution;
    status = std::string(milp::to_string(rs.status));
    gap = rs.gap;
  }

  double degradation = planned_degradation(sol.evs);
  if (kind == ModelKind::kStochastic) {
    degradation = 0.0;
    for (std::size_t w = 0; w < sol.scenarios.size(); ++w) {
      degradation += sol.probabilities[w] * planned_degradation(sol.scenarios[w]);
    }
  }
  nlohmann::json j = io::to_json(sol, fleet);
  j["date"] = io::format_date(date);
  j["status"] = status;
  j["mip_gap"] = gap;
  j["feeder_cap_kw"] = params.feeder_cap;
  j["prices"] = prices;
  j["degradation_eur"] = degradation;
  j["metrics"] = io::to_json(day_ahead_metrics(sol.p, prices, degradation, horizon));
  if (kind == ModelKind::kRobust) {
    std::vector<int> k;
    for (const auto& s : sets) k.push_back(s.k_min);
    j["k_used"] = k;
    const models::RobustAudit a = models::audit_robust(sol, fleet, sets, horizon);
    j["audit"] = {{"passed", a.passed()},
                  {"worst_drain_margin", a.worst_drain_margin},
                  {"strong_duality_residual", a.strong_duality_residual},
                  {"linearization_residual", a.linearization_residual},
                  {"simultaneous", a.simultaneous}};
  }
  write_json(out_path(o, "solution_" + o.model + ".json"), j);
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  const nlohmann::json sj = io::read_json_file(o.solution);
  const std::vector<double> p = io::read_profile(sj);
  const Data d = load(o, true, false);
  const Horizon horizon{d.history.history.n_periods, 1.0};
  if (static_cast<int>(p.size()) != horizon.n_periods) {
    throw io::InputError(o.solution + ": 'p' has " + std::to_string(p.size()) +
                         " periods, expected " + std::to_string(horizon.n_periods));
  }
  std::int64_t date = 0;
  if (!o.date.empty()) {
    date = io::parse_date(o.date, "--date: ");
  } else if (d.history.history.n_days() == 1) {
    date = d.history.first_day;
  } else {
    throw io::InputError("--date is required when the realized data spans several days");
  }
  const std::int64_t k = date - d.history.first_day;
  if (k < 0 || k >= d.history.history.n_days()) {
    throw io::InputError("no realized data for " + io::format_date(date));
  }
  std::vector<DayRecord> realized;
  for (const auto& days : d.history.history.ev_days) realized.push_back(days[k]);
  require(validate_fleet(d.fleet, horizon));
  const AggregatorParams params = aggregator(o, static_cast<int>(d.fleet.size()));
  const models::ModelArtifacts fp =
      models::build_feasibility(d.fleet, realized, p, params, horizon);
  const lp::LpSolution s = solve_lp_checked(fp.model);
  const models::FeasibilityOutcome out = models::read_feasibility(fp, s.x);

  nlohmann::json j;
  j["solution"] = o.solution;
  j["date"] = io::format_date(date);
  j["p"] = p;
  j["objective"] = out.objective;
  j["slack_kwh"] = out.slack_kwh;
  j["unmet_sale_kwh"] = out.unmet_sale_kwh;
  if (sj.contains("prices")) {
    const auto prices = sj["prices"].get<std::vector<double>>();
    MetricsReport m =
        day_ahead_metrics(p, prices, sj.value("degradation_eur", 0.0), horizon);
    m.s_fp = out.slack_kwh / 1000.0;
    m.e_minus_fp = out.unmet_sale_kwh / 1000.0;
    j["metrics"] = io::to_json(m);
  }
  const std::string model = sj.value("model", std::string("plan"));
  write_json(out_path(o, "evaluation_" + model + ".json"), j);
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  const Data d = load(o, true, true);
  harness::CampaignConfig cfg = campaign_config(o);
  cfg.run_df = cfg.run_sf = cfg.run_hf = false;
  for (const auto& m : o.models) {
    if (m == "df") cfg.run_df = true;
    else if (m == "sf") cfg.run_sf = true;
    else if (m == "hf") cfg.run_hf = true;
    else throw io::InputError("unknown model '" + m + "'");
  }
  if (o.feeder_cap) cfg.feeder_ref = *o.feeder_cap;
  harness::CampaignData data;
  data.fleet = d.fleet;
  data.history = d.history.history;
  // Align the price days with the history days.
  const std::int64_t shift = d.history.first_day - d.prices.first_day;
  if (shift < 0) throw io::InputError("prices start after the availability history");
  data.prices.assign(d.prices.days.begin() + std::min<std::int64_t>(shift, d.prices.days.size()),
                     d.prices.days.end());
  require(validate_fleet(data.fleet, Horizon{}));
  require(cfg.validate(data));

  const harness::CampaignResult r = harness::run_campaign(cfg, data);
  std::ostringstream csv;
  harness::write_summary_csv(r, csv);
  const fs::path csv_path = out_path(o, "summary.csv");
  io::write_text_file(csv_path.string(), csv.str());
  std::cout << harness::comparison_table(r) << "\nwrote " << csv_path.string() << "\n";

  nlohmann::json j;
  j["first_date"] = io::format_date(d.history.first_day + cfg.first_day);
  j["n_days"] = cfg.n_days;
  j["wall_seconds"] = r.wall_seconds;
  j["all_audits_passed"] = r.all_audits_passed;
  for (std::size_t k = 0; k < r.kinds.size(); ++k) {
    j["totals"][to_string(r.kinds[k])] = io::to_json(r.totals[k]);
  }
  write_json(out_path(o, "campaign.json"), j);
  return r.all_audits_passed ? kExitOk : kExitSolver;
}

int cmd_gen_data(const Options& o) {
  if (!o.synthetic) throw io::InputError("gen-data needs --synthetic SEED");
  const Data d = load(o, true, true);
  auto write = [&](const char* name, auto&& fn) {
    std::ostringstream s;
    fn(s);
    const fs::path path = out_path(o, name);
    io::write_text_file(path.string(), s.str());
    std::cout << "wrote " << path.string() << "\n";
  };
  write("fleet.csv", [&](std::ostream& s) { io::write_fleet(s, d.fleet); });
  write("prices.csv", [&](std::ostream& s) { io::write_prices(s, d.prices); });
  write("availability.csv", [&](std::ostream& s) { io::write_availability(s, d.history); });
  write("consumption.csv", [&](std::ostream& s) { io::write_consumption(s, d.history); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead dispatch of an electric-vehicle fleet"};
  app.set_config("--config", "", "key = value file; command-line flags win");
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  Options o;

  app.add_option("--fleet", o.fleet, "fleet CSV (ev_id plus optional EV parameters)");
  app.add_option("--prices", o.prices, "prices CSV (timestamp, eur_per_kwh)");
  app.add_option("--availability", o.availability, "availability CSV (ev_id, timestamp, avail)");
  app.add_option("--consumption", o.consumption, "consumption CSV (ev_id, timestamp, kwh)");
  app.add_option("--synthetic", o.synthetic, "generate data from this seed instead of CSVs");
  app.add_option("--evs", o.synthetic_evs, "synthetic fleet size")->check(CLI::PositiveNumber);
  app.add_option("--days", o.synthetic_days, "synthetic history length")->check(CLI::PositiveNumber);
  app.add_option("--start-date", o.start_date, "first synthetic date");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--date", o.date, "target date YYYY-MM-DD");
  app.add_option("--feeder-cap", o.feeder_cap, "feeder rating in kW (default 8 kW per EV)");
  app.add_option("--feeder-ref", o.feeder_ref, "reference rating before --feeder-reduction");
  app.add_option("--feeder-reduction", o.feeder_reduction, "fraction of the rating removed");
  app.add_option("--pen-balance", o.pen_balance, "EUR/kWh penalty on battery slack");
  app.add_option("--pen-sale", o.pen_sale, "EUR/kWh penalty on unmet sales");
  app.add_option("--window-length", o.window_length, "same-weekday days in the window");
  app.add_option("--window-step", o.window_step, "days between window records");
  app.add_option("--price-lookback", o.price_lookback, "days averaged for a price forecast");
  app.add_option("--k-offset", o.k_offset, "added to every K_v where the model allows");
  app.add_option("--hf-time-limit", o.hf_time_limit, "seconds for a coupled robust solve");
  app.add_option("--hf-node-limit", o.hf_node_limit, "nodes for a coupled robust solve");
  app.add_option("--threads", o.threads, "campaign worker threads")->check(CLI::PositiveNumber);

  auto* estimate = app.add_subcommand("estimate", "uncertainty sets and expected profiles");
  auto* solve = app.add_subcommand("solve", "solve one day-ahead model");
  solve->add_option("--model", o.model, "df, sf or hf")->required();
  solve->add_option("--estimate", o.estimate, "estimate JSON in place of the history CSVs");
  solve->add_option("--export-lp", o.export_lp, "write the model as an LP file and stop");
  auto* evaluate = app.add_subcommand("evaluate", "ex-post feasibility of a solved plan");
  evaluate->add_option("--solution", o.solution, "solution JSON from solve")->required();
  auto* simulate = app.add_subcommand("simulate", "rolling-horizon campaign");
  simulate->add_option("--models", o.models, "subset of df sf hf")->delimiter(',');
  simulate->add_option("--first-day", o.first_day, "index of the first simulated day");
  simulate->add_option("--n-days", o.n_days, "number of simulated days");
  auto* gen = app.add_subcommand("gen-data", "write a synthetic data set as CSV");
  for (auto* sub : {estimate, solve, evaluate, simulate, gen}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*estimate) return cmd_estimate(o);
    if (*solve) return cmd_solve(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*simulate) return cmd_simulate(o);
    if (*gen) return cmd_gen_data(o);
  } catch (const io::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInput;
}
