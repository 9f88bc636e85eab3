#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "io.hpp"

namespace evagg::io {
namespace {

namespace fs = std::filesystem;

CsvTable csv(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in, "mem.csv");
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, ErrorsCarryLineNumbers) {
  EXPECT_EQ(message_of([] { csv("timestamp,eur_per_kwh\n2018-01-01T00:00,0.1,9\n"); }),
            "mem.csv:2: expected 2 fields, found 3");
  const auto t = csv("timestamp,eur_per_kwh\n\n2018-01-01T00:00,abc\n");
  EXPECT_EQ(message_of([&] { read_prices(t); }), "mem.csv:3: not a number: 'abc'");
  const auto neg = csv("timestamp,eur_per_kwh\n2018-01-01T00:00,-0.1\n");
  EXPECT_NE(message_of([&] { read_prices(neg); }).find("strictly positive"),
            std::string::npos);
  const auto half = csv("timestamp,eur_per_kwh\n2018-01-01T00:30,0.1\n");
  EXPECT_NE(message_of([&] { read_prices(half); }).find("mem.csv:2:"), std::string::npos);
  EXPECT_NE(message_of([] { csv("a,b\n").column("c"); }).find("missing column 'c'"),
            std::string::npos);
}

TEST(Csv, NumbersAreLocaleIndependentAndRoundTrip) {
  EXPECT_DOUBLE_EQ(parse_double("0.125", ""), 0.125);
  EXPECT_DOUBLE_EQ(parse_double("+2e-3", ""), 0.002);
  EXPECT_THROW(parse_double("0,125", ""), InputError);
  for (double x : {0.1, 1.0 / 3.0, 30.55, -0.015625, 1e-300}) {
    EXPECT_EQ(parse_double(format_double(x), ""), x);
  }
}

TEST(Csv, Timestamps) {
  const Timestamp a = parse_timestamp("2018-02-01T07:00", "");
  EXPECT_EQ(format_timestamp(a), "2018-02-01T07:00");
  const Timestamp b = parse_timestamp("2018-02-01 07:00:00Z", "");
  EXPECT_EQ(a.day, b.day);
  EXPECT_EQ(a.hour, b.hour);
  EXPECT_EQ(parse_date("2018-03-01", "") - parse_date("2018-02-28", ""), 1);
  EXPECT_THROW(parse_timestamp("2018-02-30T00:00", ""), InputError);
  EXPECT_THROW(parse_timestamp("2018-02-01T07:00+01:00", ""), InputError);
  EXPECT_THROW(parse_timestamp("2018-02-01", ""), InputError);
}

TEST(Csv, HistoryNeedsEveryHour) {
  std::string text = "ev_id,timestamp,avail\n";
  for (int t = 0; t < 24; ++t) {
    if (t == 5) continue;
    text += "a,2018-01-01T" + std::string(t < 10 ? "0" : "") + std::to_string(t) + ":00,1\n";
  }
  const std::string msg = message_of([&] { read_history(csv(text), nullptr); });
  EXPECT_NE(msg.find("no availability for a at 2018-01-01T05:00"), std::string::npos) << msg;
}

TEST(Csv, ConsumptionOnlyWhileAway) {
  std::string avail = "ev_id,timestamp,avail\n";
  for (int t = 0; t < 24; ++t) {
    avail += "a,2018-01-01T" + std::string(t < 10 ? "0" : "") + std::to_string(t) + ":00," +
             (t == 8 ? "0" : "1") + "\n";
  }
  const auto a = csv(avail);
  const auto good = csv("ev_id,timestamp,kwh\na,2018-01-01T08:00,4.5\n");
  const HistoryTable h = read_history(a, &good);
  EXPECT_DOUBLE_EQ(h.history.ev_days[0][0].cons[8], 4.5);
  const auto bad = csv("ev_id,timestamp,kwh\na,2018-01-01T09:00,1\n");
  EXPECT_EQ(message_of([&] { read_history(a, &bad); }),
            "mem.csv:2: consumption while the EV is plugged in");
}

TEST(Csv, FleetDefaultsAndRoundTrip) {
  const FleetSpec f = read_fleet(csv("ev_id,e_max\nx,40\ny,\n"));
  ASSERT_EQ(f.size(), 2u);
  EXPECT_DOUBLE_EQ(f[0].e_max, 40.0);
  EXPECT_DOUBLE_EQ(f[0].e_init, 25.0);
  EXPECT_DOUBLE_EQ(f[1].e_init, 30.55);
  std::ostringstream out;
  write_fleet(out, f);
  const FleetSpec g = read_fleet(csv(out.str()));
  EXPECT_EQ(g[0].e_init, f[0].e_init);
  EXPECT_EQ(g[1].slope, f[1].slope);
  EXPECT_THROW(read_fleet(csv("ev_id,colour\nx,red\n")), InputError);
}

TEST(Json, ProfileRoundTripsExactly) {
  DispatchSolution sol;
  sol.p = {0.1, -7.4 / 3.0, 1e-17, 123456.789};
  sol.evs.resize(1);
  const FleetSpec fleet(1);
  const auto text = to_json(sol, fleet).dump(2);
  const auto back = read_profile(nlohmann::json::parse(text));
  EXPECT_EQ(back, sol.p);
}

// End-to-end runs of the built command-line tool.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evagg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(EVAGG_CLI) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }
  std::string read(const std::string& name) {
    std::ifstream in(dir_ / name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  void write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }
  std::string path(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, EstimateOnFourThursdays) {
  // Four same-weekday records: home 00-06 and 21-24 every time, away
  // 09-15 every time, the other hours vary; 18, 13, 14 and 11 hours home.
  const std::vector<std::vector<int>> home_varying = {
      {6, 7, 8, 15, 16, 17, 18, 19, 20}, {6, 7, 8, 15}, {16, 17, 18, 19, 20}, {6, 20}};
  const std::int64_t first = parse_date("2018-01-04", "");  // a Thursday
  std::string avail = "ev_id,timestamp,avail\n";
  for (int d = 0; d < 28; ++d) {
    std::vector<int> a(24, 1);
    if (d % 7 == 0) {
      for (int t = 6; t < 21; ++t) a[t] = 0;
      for (int t : home_varying[d / 7]) a[t] = 1;
    }
    for (int t = 0; t < 24; ++t) {
      avail += "ev0," + format_timestamp({first + d, t}) + "," + std::to_string(a[t]) + "\n";
    }
  }
  write("avail.csv", avail);
  write("fleet.csv", "ev_id\nev0\n");
  ASSERT_EQ(run("estimate --fleet " + path("fleet.csv") + " --availability " +
                path("avail.csv") + " --out " + dir_.string()),
            0)
      << read("stderr.txt");
  const auto j = nlohmann::json::parse(read("estimate_2018-02-01.json"));
  const auto& ev = j["evs"][0];
  const auto lo = ev["a_lo"].get<std::vector<int>>();
  const auto hi = ev["a_hi"].get<std::vector<int>>();
  for (int t = 0; t < 24; ++t) {
    const bool home = t < 6 || t >= 21;
    const bool away = t >= 9 && t < 15;
    if (home) {
      EXPECT_TRUE(lo[t] == 1 && hi[t] == 1) << t;
    }
    if (away) {
      EXPECT_TRUE(lo[t] == 0 && hi[t] == 0) << t;
    }
    if (!home && !away) {
      EXPECT_TRUE(lo[t] == 0 && hi[t] == 1) << t;
    }
  }
  EXPECT_EQ(ev["k_min"].get<int>(), 14);  // floor((18 + 13 + 14 + 11) / 4)
}

TEST_F(Cli, SolveEvaluateRoundTrip) {
  ASSERT_EQ(run("gen-data --synthetic 5 --evs 3 --days 29 --out " + dir_.string()), 0)
      << read("stderr.txt");
  const std::string data = " --fleet " + path("fleet.csv") + " --prices " +
                           path("prices.csv") + " --availability " +
                           path("availability.csv") + " --consumption " +
                           path("consumption.csv") + " --out " + dir_.string();
  ASSERT_EQ(run("solve --model hf --date 2018-01-29" + data), 0) << read("stderr.txt");
  const auto sol = nlohmann::json::parse(read("solution_hf.json"));
  EXPECT_TRUE(sol["audit"]["passed"].get<bool>());
  for (const char* key : {"alpha", "tau", "duals"}) {
    EXPECT_TRUE(sol["evs"][0].contains(key)) << key;
  }
  ASSERT_EQ(run("evaluate --solution " + path("solution_hf.json") + " --date 2018-01-29" + data),
            0)
      << read("stderr.txt");
  const auto ev = nlohmann::json::parse(read("evaluation_robust.json"));
  EXPECT_EQ(ev["p"].get<std::vector<double>>(), sol["p"].get<std::vector<double>>());
  EXPECT_GE(ev["objective"].get<double>(), 0.0);

  for (const char* m : {"df", "sf"}) {
    EXPECT_EQ(run(std::string("solve --model ") + m + " --date 2018-01-29" + data), 0)
        << read("stderr.txt");
  }
  EXPECT_EQ(run("solve --model hf --date 2018-01-29 --export-lp " + path("m.lp") + data), 0);
  EXPECT_NE(read("m.lp").find("Binaries"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  ASSERT_EQ(run("gen-data --synthetic 5 --evs 2 --days 29 --out " + dir_.string()), 0);
  std::string prices = read("prices.csv");
  const auto pos = prices.find('\n', prices.find('\n') + 1);
  prices.replace(prices.find(',', pos) + 1, prices.find('\n', pos + 1) - prices.find(',', pos) - 1,
                 "-0.05");
  write("neg.csv", prices);
  const std::string hist = " --fleet " + path("fleet.csv") + " --availability " +
                           path("availability.csv") + " --out " + dir_.string();
  EXPECT_EQ(run("solve --model df --prices " + path("neg.csv") + hist), 1);
  EXPECT_NE(read("stderr.txt").find("neg.csv:3: price -0.05 rejected; prices must be strictly positive"),
            std::string::npos)
      << read("stderr.txt");
  EXPECT_EQ(run("solve --model xx --prices " + path("prices.csv") + hist), 1);
  EXPECT_EQ(run("solve --prices " + path("prices.csv") + hist), 1);
  EXPECT_EQ(run("solve --model df --synthetic 1 --fleet " + path("fleet.csv")), 1);
  // Infeasible coupled model: a feeder too small to carry any demand.
  EXPECT_EQ(run("solve --model hf --feeder-cap 0.001 --prices " + path("prices.csv") + hist +
                " --consumption " + path("consumption.csv")),
            2)
      << read("stderr.txt");
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  write("run.toml",
        "synthetic = 9\nevs = 2\ndays = 29\nfeeder-cap = 5.5\n[solve]\nmodel = \"df\"\n");
  ASSERT_EQ(run("--config " + path("run.toml") + " solve --out " + dir_.string()), 0)
      << read("stderr.txt");
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(read("solution_df.json"))["feeder_cap_kw"].get<double>(),
                   5.5);
  ASSERT_EQ(run("--config " + path("run.toml") + " solve --feeder-cap 6 --out " + dir_.string()),
            0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(read("solution_df.json"))["feeder_cap_kw"].get<double>(),
                   6.0);
  write("bad.toml", "feeder_cap = 3\n");
  EXPECT_EQ(run("--config " + path("bad.toml") + " solve --model df --synthetic 1"), 1);
}

}  // namespace
}  // namespace evagg::io
