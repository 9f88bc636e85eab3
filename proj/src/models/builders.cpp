#include <cmath>
#include <stdexcept>
#include <string>

#include "evagg/models.hpp"

namespace evagg::models {
namespace {

std::string suffix(int ev, int t, int scenario) {
  std::string s;
  if (ev >= 0) s += "_v" + std::to_string(ev);
  if (t >= 0) s += "_t" + std::to_string(t);
  if (scenario >= 0) s += "_w" + std::to_string(scenario);
  return s;
}

const char* var_prefix(Role role) {
  switch (role) {
    case Role::kPower: return "p";
    case Role::kCharge: return "charge";
    case Role::kDischarge: return "discharge";
    case Role::kEnergy: return "energy";
    case Role::kSlack: return "slack";
    case Role::kDegradation: return "cdeg";
    case Role::kTransport: return "tau";
    case Role::kAlpha: return "alpha";
    case Role::kChargeProduct: return "zc";
    case Role::kDischargeProduct: return "zd";
    case Role::kDrainZeta: return "zeta_drain";
    case Role::kDrainBetaLo: return "beta_lo_drain";
    case Role::kDrainBetaHi: return "beta_hi_drain";
    case Role::kInteractionZeta: return "zeta_inter";
    case Role::kInteractionBetaLo: return "beta_lo_inter";
    case Role::kInteractionBetaHi: return "beta_hi_inter";
    case Role::kUnmetSale: return "unmet_sale";
  }
  return "x";
}

class Builder {
 public:
  explicit Builder(ModelArtifacts& art) : art_(art) {}

  int var(Role role, int ev, int t, int scenario, double lo, double up,
          bool integer = false) {
    const int j = art_.model.add_variable(
        var_prefix(role) + suffix(ev, t, scenario), lo, up, integer);
    art_.vars.emplace(VarKey{role, ev, t, scenario}, j);
    return j;
  }

  void bound_tag(const char* tag, int column) {
    art_.bound_tags[tag].push_back(column);
  }

  int row(const char* tag, int ev, int t, int scenario,
          std::vector<lp::Term> terms, lp::Sense sense, double rhs) {
    const int i = art_.model.add_constraint(
        tag + suffix(ev, t, scenario), std::move(terms), sense, rhs);
    art_.row_tag.push_back(tag);
    art_.tag_rows[tag].push_back(i);
    return i;
  }

  ModelArtifacts& art() { return art_; }

 private:
  ModelArtifacts& art_;
};

void check_inputs(const FleetSpec& fleet, const std::vector<double>& prices,
                  const AggregatorParams& params, const Horizon& horizon) {
  std::vector<std::string> diag = validate_fleet(fleet, horizon);
  for (auto& s : validate_prices(prices, horizon)) diag.push_back(std::move(s));
  for (auto& s : validate_aggregator(params)) diag.push_back(std::move(s));
  if (fleet.empty()) diag.push_back("fleet is empty");
  if (!diag.empty()) {
    std::string msg = "invalid model inputs:";
    for (const auto& s : diag) msg += "\n  " + s;
    throw std::invalid_argument(msg);
  }
}

// Battery block for one EV: energy dynamics with availability multiplying
// charging, limits, terminal condition, and optionally the degradation
// row. tau_fixed selects tau as fixed columns (true) or as rhs constants.
struct EvBlock {
  std::vector<int> c, d, e, s, cdeg;
};

EvBlock battery_block(Builder& b, const EvParams& ev, int v, int scenario,
                      const std::vector<double>& alpha,
                      const std::vector<double>& tau, bool with_degradation,
                      double weight, double pen_balance, const Horizon& h) {
  const int n_t = h.n_periods;
  const double ph = h.period_hours;
  const double k = ev.degradation_rate();
  EvBlock blk;
  for (int t = 0; t < n_t; ++t) {
    const double a = alpha[t];
    const int c = b.var(Role::kCharge, v, t, scenario, 0.0, ev.c_max);
    const int d = b.var(Role::kDischarge, v, t, scenario, 0.0, ev.d_max * a);
    const int e = b.var(Role::kEnergy, v, t, scenario, ev.e_min, ev.e_max);
    const int s = b.var(Role::kSlack, v, t, scenario, 0.0, lp::kInf);
    b.bound_tag(tags::kChargeLimit, c);
    b.bound_tag(tags::kDischargeLimit, d);
    b.bound_tag(tags::kEnergyLimits, e);
    b.art().model.set_objective(s, weight * pen_balance);
    blk.c.push_back(c);
    blk.d.push_back(d);
    blk.e.push_back(e);
    blk.s.push_back(s);

    int tau_col = -1;
    if (with_degradation) {
      tau_col = b.var(Role::kTransport, v, t, scenario, tau[t], tau[t]);
    }
    std::vector<lp::Term> dyn = {{e, 1.0}, {c, -ev.eta * ph * a},
                                 {d, ph / ev.eta}, {s, -1.0}};
    double rhs = t == 0 ? ev.e_init : 0.0;
    if (t > 0) dyn.push_back({blk.e[t - 1], -1.0});
    if (tau_col >= 0) {
      dyn.push_back({tau_col, 1.0});
    } else {
      rhs -= tau[t];
    }
    b.row(tags::kBatteryDynamics, v, t, scenario, std::move(dyn),
          lp::Sense::kEqual, rhs);

    if (with_degradation) {
      const int cd = b.var(Role::kDegradation, v, t, scenario, 0.0, lp::kInf);
      b.art().model.set_objective(cd, weight);
      b.row(tags::kDegradation, v, t, scenario,
            {{cd, 1.0}, {d, -k * ph / ev.eta}, {tau_col, -k}},
            lp::Sense::kEqual, 0.0);
      blk.cdeg.push_back(cd);
    }
  }
  b.row(tags::kTerminalEnergy, v, -1, scenario, {{blk.e[n_t - 1], 1.0}},
        lp::Sense::kEqual, ev.e_init);
  return blk;
}

std::vector<int> power_columns(Builder& b, const std::vector<double>& prices,
                               const AggregatorParams& params,
                               const Horizon& h) {
  std::vector<int> p;
  for (int t = 0; t < h.n_periods; ++t) {
    const int j = b.var(Role::kPower, -1, t, -1, -params.feeder_cap,
                        params.feeder_cap);
    b.art().model.set_objective(j, prices[t] * h.period_hours);
    b.bound_tag(tags::kFeederCapacity, j);
    p.push_back(j);
  }
  return p;
}

void check_profile_shape(const std::vector<std::vector<double>>& m, int n_v,
                         int n_t, const char* what) {
  if (static_cast<int>(m.size()) != n_v) {
    throw std::invalid_argument(std::string(what) + ": wrong EV count");
  }
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != n_t) {
      throw std::invalid_argument(std::string(what) + ": horizon mismatch");
    }
  }
}

}  // namespace

const char* to_string(Role role) { return var_prefix(role); }

int ModelArtifacts::find(Role role, int ev, int t, int scenario) const {
  auto it = vars.find(VarKey{role, ev, t, scenario});
  return it == vars.end() ? -1 : it->second;
}

int ModelArtifacts::var(Role role, int ev, int t, int scenario) const {
  const int j = find(role, ev, t, scenario);
  if (j < 0) {
    throw std::out_of_range(std::string("no variable ") + to_string(role) +
                            suffix(ev, t, scenario));
  }
  return j;
}

const std::vector<int>& ModelArtifacts::rows(const std::string& tag) const {
  static const std::vector<int> kEmpty;
  auto it = tag_rows.find(tag);
  return it == tag_rows.end() ? kEmpty : it->second;
}

ModelArtifacts build_deterministic(
    const FleetSpec& fleet, const std::vector<double>& prices,
    const std::vector<std::vector<double>>& alpha_hat,
    const std::vector<std::vector<double>>& tau_hat,
    const AggregatorParams& params, const Horizon& horizon) {
  check_inputs(fleet, prices, params, horizon);
  const int n_v = static_cast<int>(fleet.size());
  const int n_t = horizon.n_periods;
  check_profile_shape(alpha_hat, n_v, n_t, "expected availability");
  check_profile_shape(tau_hat, n_v, n_t, "expected consumption");
  for (int v = 0; v < n_v; ++v) {
    for (int t = 0; t < n_t; ++t) {
      if (!(alpha_hat[v][t] >= 0.0 && alpha_hat[v][t] <= 1.0)) {
        throw std::invalid_argument("expected availability outside [0, 1]");
      }
      if (!(tau_hat[v][t] >= 0.0)) {
        throw std::invalid_argument("expected consumption negative");
      }
    }
  }

  ModelArtifacts art;
  art.kind = ModelKind::kDeterministic;
  art.horizon = horizon;
  art.n_evs = n_v;
  Builder b(art);
  const std::vector<int> p = power_columns(b, prices, params, horizon);
  std::vector<EvBlock> blocks;
  for (int v = 0; v < n_v; ++v) {
    blocks.push_back(battery_block(b, fleet[v], v, -1, alpha_hat[v],
                                   tau_hat[v], true, 1.0, params.pen_balance,
                                   horizon));
  }
  for (int t = 0; t < n_t; ++t) {
    std::vector<lp::Term> bal = {{p[t], 1.0}};
    for (int v = 0; v < n_v; ++v) {
      bal.push_back({blocks[v].c[t], -1.0});
      bal.push_back({blocks[v].d[t], 1.0});
    }
    b.row(tags::kPowerBalance, -1, t, -1, std::move(bal), lp::Sense::kEqual,
          0.0);
  }
  return art;
}

ModelArtifacts build_stochastic(const FleetSpec& fleet,
                                const std::vector<double>& prices,
                                const ScenarioSet& scenarios,
                                const AggregatorParams& params,
                                const Horizon& horizon) {
  check_inputs(fleet, prices, params, horizon);
  const int n_v = static_cast<int>(fleet.size());
  const int n_t = horizon.n_periods;
  const int n_w = scenarios.size();
  if (n_w < 1) throw std::invalid_argument("scenario set is empty");
  double total = 0.0;
  for (double pi : scenarios.probability) {
    if (!(pi > 0.0)) throw std::invalid_argument("scenario probability <= 0");
    total += pi;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("scenario probabilities do not sum to 1");
  }
  if (static_cast<int>(scenarios.realized.size()) != n_w) {
    throw std::invalid_argument("scenario count mismatch");
  }
  for (const auto& w : scenarios.realized) {
    if (static_cast<int>(w.size()) != n_v) {
      throw std::invalid_argument("scenario EV count mismatch");
    }
    for (const DayRecord& r : w) {
      if (static_cast<int>(r.avail.size()) != n_t ||
          static_cast<int>(r.cons.size()) != n_t) {
        throw std::invalid_argument("scenario horizon mismatch");
      }
    }
  }

  ModelArtifacts art;
  art.kind = ModelKind::kStochastic;
  art.horizon = horizon;
  art.n_evs = n_v;
  art.n_scenarios = n_w;
  art.probabilities = scenarios.probability;
  Builder b(art);
  const std::vector<int> p = power_columns(b, prices, params, horizon);
  for (int w = 0; w < n_w; ++w) {
    std::vector<EvBlock> blocks;
    for (int v = 0; v < n_v; ++v) {
      const DayRecord& r = scenarios.realized[w][v];
      const std::vector<double> alpha(r.avail.begin(), r.avail.end());
      blocks.push_back(battery_block(b, fleet[v], v, w, alpha, r.cons, true,
                                     scenarios.probability[w],
                                     params.pen_balance, horizon));
    }
    for (int t = 0; t < n_t; ++t) {
      std::vector<lp::Term> bal = {{p[t], -1.0}};
      for (int v = 0; v < n_v; ++v) {
        bal.push_back({blocks[v].c[t], 1.0});
        bal.push_back({blocks[v].d[t], -1.0});
      }
      b.row(tags::kScenarioBalance, -1, t, w, std::move(bal),
            lp::Sense::kLessEqual, 0.0);
    }
  }
  return art;
}

std::vector<std::string> robust_diagnostics(
    const FleetSpec& fleet, const std::vector<UncertaintySet>& sets,
    const Horizon& horizon) {
  std::vector<std::string> out;
  if (sets.size() != fleet.size()) {
    out.push_back("uncertainty sets and fleet differ in size");
    return out;
  }
  for (std::size_t v = 0; v < fleet.size(); ++v) {
    const std::string who =
        "EV " + (fleet[v].id.empty() ? std::to_string(v) : fleet[v].id) + ": ";
    for (auto& s : validate_uncertainty(sets[v], horizon)) {
      out.push_back(who + s);
    }
    if (!out.empty()) continue;
    const EvParams& ev = fleet[v];
    const int n_t = horizon.n_periods;
    const double demand = ev.daily_demand;
    // Transport energy fits only where the EV may be away, and the count
    // constraint leaves at most n_t - K such periods.
    int may_leave = 0;
    for (int t = 0; t < n_t; ++t) may_leave += sets[v].a_lo[t] == 0;
    may_leave = std::min(may_leave, n_t - sets[v].k_min);
    if (demand > ev.usable() * may_leave + 1e-9) {
      out.push_back(who + "transport demand " + std::to_string(demand) +
                    " kWh cannot be placed in the periods the EV may be away");
    }
    // The worst-case profile holds at least max(K, sum a_lo) available
    // periods; charging at full power in all of them bounds the drain value.
    const int guaranteed = std::max(sets[v].k_min, sets[v].sum_lo());
    const double best_drain =
        ev.eta * ev.c_max * horizon.period_hours * guaranteed;
    if (demand > 0.0 && demand > best_drain + 1e-9) {
      out.push_back(who + "worst-case availability cannot cover demand " +
                    std::to_string(demand) + " kWh");
    }
  }
  return out;
}

ModelArtifacts build_robust_milp(const FleetSpec& fleet,
                                 const std::vector<double>& prices,
                                 const std::vector<UncertaintySet>& sets,
                                 const AggregatorParams& params,
                                 const Horizon& horizon) {
  check_inputs(fleet, prices, params, horizon);
  const auto diag = robust_diagnostics(fleet, sets, horizon);
  if (!diag.empty()) {
    std::string msg = "robust model cannot be built:";
    for (const auto& s : diag) msg += "\n  " + s;
    throw std::invalid_argument(msg);
  }
  const int n_v = static_cast<int>(fleet.size());
  const int n_t = horizon.n_periods;
  const double ph = horizon.period_hours;

  ModelArtifacts art;
  art.kind = ModelKind::kRobust;
  art.horizon = horizon;
  art.n_evs = n_v;
  Builder b(art);
  lp::LinearModel& m = art.model;
  const std::vector<int> p = power_columns(b, prices, params, horizon);
  std::vector<std::vector<int>> cs(n_v), ds(n_v);

  for (int v = 0; v < n_v; ++v) {
    const EvParams& ev = fleet[v];
    const UncertaintySet& u = sets[v];
    const double k = ev.degradation_rate();
    const double cap = ev.usable();
    std::vector<int> c(n_t), d(n_t), e(n_t), s(n_t), tau(n_t), alpha(n_t),
        zc(n_t), zd(n_t), bl_a(n_t), bh_a(n_t), bl_b(n_t), bh_b(n_t);
    for (int t = 0; t < n_t; ++t) {
      c[t] = b.var(Role::kCharge, v, t, -1, 0.0, ev.c_max);
      d[t] = b.var(Role::kDischarge, v, t, -1, 0.0, ev.d_max);
      e[t] = b.var(Role::kEnergy, v, t, -1, ev.e_min, ev.e_max);
      s[t] = b.var(Role::kSlack, v, t, -1, 0.0, lp::kInf);
      tau[t] = b.var(Role::kTransport, v, t, -1, 0.0, lp::kInf);
      alpha[t] = b.var(Role::kAlpha, v, t, -1, u.a_lo[t], u.a_hi[t], true);
      zc[t] = b.var(Role::kChargeProduct, v, t, -1, 0.0, lp::kInf);
      zd[t] = b.var(Role::kDischargeProduct, v, t, -1, 0.0, lp::kInf);
      bl_a[t] = b.var(Role::kDrainBetaLo, v, t, -1, 0.0, lp::kInf);
      bh_a[t] = b.var(Role::kDrainBetaHi, v, t, -1, -lp::kInf, 0.0);
      bl_b[t] = b.var(Role::kInteractionBetaLo, v, t, -1, 0.0, lp::kInf);
      bh_b[t] = b.var(Role::kInteractionBetaHi, v, t, -1, -lp::kInf, 0.0);
      b.bound_tag(tags::kChargeLimit, c[t]);
      b.bound_tag(tags::kDischargeLimit, d[t]);
      b.bound_tag(tags::kEnergyLimits, e[t]);
      b.bound_tag(tags::kAvailabilityBounds, alpha[t]);
      m.set_objective(s[t], params.pen_balance);
    }
    const int zeta_a = b.var(Role::kDrainZeta, v, -1, -1, 0.0, lp::kInf);
    const int zeta_b = b.var(Role::kInteractionZeta, v, -1, -1, 0.0, lp::kInf);

    std::vector<lp::Term> tau_sum, count, drain_obj, strong;
    drain_obj.push_back({zeta_a, static_cast<double>(u.k_min)});
    strong.push_back({zeta_b, static_cast<double>(u.k_min)});
    for (int t = 0; t < n_t; ++t) {
      // Linearized dynamics: charging reaches the battery only as z^c.
      std::vector<lp::Term> dyn = {{e[t], 1.0}, {zc[t], -ev.eta * ph},
                                   {d[t], ph / ev.eta}, {tau[t], 1.0},
                                   {s[t], -1.0}};
      if (t > 0) dyn.push_back({e[t - 1], -1.0});
      b.row(tags::kBatteryDynamics, v, t, -1, std::move(dyn),
            lp::Sense::kEqual, t == 0 ? ev.e_init : 0.0);
      b.row(tags::kDischargeAvailability, v, t, -1,
            {{d[t], 1.0}, {alpha[t], -ev.d_max}}, lp::Sense::kLessEqual, 0.0);
      const int cd = b.var(Role::kDegradation, v, t, -1, 0.0, lp::kInf);
      m.set_objective(cd, 1.0);
      b.row(tags::kDegradation, v, t, -1,
            {{cd, 1.0}, {d[t], -k * ph / ev.eta}, {tau[t], -k}},
            lp::Sense::kEqual, 0.0);
      b.row(tags::kTransportPlacement, v, t, -1,
            {{tau[t], 1.0}, {alpha[t], cap}}, lp::Sense::kLessEqual, cap);
      tau_sum.push_back({tau[t], 1.0});

      // Dual feasibility of the draining lower level.
      b.row(tags::kDrainDualFeasibility, v, t, -1,
            {{zeta_a, 1.0}, {bl_a[t], 1.0}, {bh_a[t], 1.0},
             {c[t], -ev.eta * ph}, {d[t], ph / ev.eta}},
            lp::Sense::kEqual, 0.0);
      drain_obj.push_back({bl_a[t], static_cast<double>(u.a_lo[t])});
      drain_obj.push_back({bh_a[t], static_cast<double>(u.a_hi[t])});

      // Primal and dual feasibility of the interaction lower level.
      count.push_back({alpha[t], 1.0});
      b.row(tags::kInteractionDualFeasibility, v, t, -1,
            {{zeta_b, 1.0}, {bl_b[t], 1.0}, {bh_b[t], 1.0},
             {c[t], -ev.eta * ph}, {d[t], -ph / ev.eta}},
            lp::Sense::kEqual, 0.0);
      strong.push_back({bl_b[t], static_cast<double>(u.a_lo[t])});
      strong.push_back({bh_b[t], static_cast<double>(u.a_hi[t])});
      strong.push_back({zc[t], -ev.eta * ph});
      strong.push_back({zd[t], -ph / ev.eta});

      // Exact products of a binary and a bounded continuous variable.
      b.row(tags::kMcCormickChargeLower, v, t, -1, {{c[t], 1.0}, {zc[t], -1.0}},
            lp::Sense::kGreaterEqual, 0.0);
      b.row(tags::kMcCormickChargeUpper, v, t, -1,
            {{c[t], 1.0}, {zc[t], -1.0}, {alpha[t], ev.c_max}},
            lp::Sense::kLessEqual, ev.c_max);
      b.row(tags::kMcCormickChargeEnvelope, v, t, -1,
            {{zc[t], 1.0}, {alpha[t], -ev.c_max}}, lp::Sense::kLessEqual, 0.0);
      b.row(tags::kMcCormickDischargeLower, v, t, -1,
            {{d[t], 1.0}, {zd[t], -1.0}}, lp::Sense::kGreaterEqual, 0.0);
      b.row(tags::kMcCormickDischargeUpper, v, t, -1,
            {{d[t], 1.0}, {zd[t], -1.0}, {alpha[t], ev.d_max}},
            lp::Sense::kLessEqual, ev.d_max);
      b.row(tags::kMcCormickDischargeEnvelope, v, t, -1,
            {{zd[t], 1.0}, {alpha[t], -ev.d_max}}, lp::Sense::kLessEqual, 0.0);
    }
    b.row(tags::kTerminalEnergy, v, -1, -1, {{e[n_t - 1], 1.0}},
          lp::Sense::kEqual, ev.e_init);
    b.row(tags::kTransportDemand, v, -1, -1, std::move(tau_sum),
          lp::Sense::kEqual, ev.daily_demand);
    b.row(tags::kDrainDualObjective, v, -1, -1, std::move(drain_obj),
          lp::Sense::kGreaterEqual, ev.daily_demand);
    b.row(tags::kInteractionCount, v, -1, -1, std::move(count),
          lp::Sense::kGreaterEqual, u.k_min);
    b.row(tags::kStrongDuality, v, -1, -1, std::move(strong),
          lp::Sense::kEqual, 0.0);
    cs[v] = c;
    ds[v] = d;
  }
  for (int t = 0; t < n_t; ++t) {
    std::vector<lp::Term> bal = {{p[t], 1.0}};
    for (int v = 0; v < n_v; ++v) {
      bal.push_back({cs[v][t], -1.0});
      bal.push_back({ds[v][t], 1.0});
    }
    b.row(tags::kPowerBalance, -1, t, -1, std::move(bal), lp::Sense::kEqual,
          0.0);
  }
  return art;
}

ModelArtifacts build_feasibility(const FleetSpec& fleet,
                                 const std::vector<DayRecord>& realized,
                                 const std::vector<double>& p,
                                 const AggregatorParams& params,
                                 const Horizon& horizon) {
  std::vector<std::string> diag = validate_fleet(fleet, horizon);
  for (auto& s : validate_aggregator(params)) diag.push_back(std::move(s));
  if (!diag.empty()) {
    std::string msg = "invalid feasibility inputs:";
    for (const auto& s : diag) msg += "\n  " + s;
    throw std::invalid_argument(msg);
  }
  const int n_v = static_cast<int>(fleet.size());
  const int n_t = horizon.n_periods;
  if (static_cast<int>(p.size()) != n_t) {
    throw std::invalid_argument("committed profile horizon mismatch");
  }
  if (static_cast<int>(realized.size()) != n_v) {
    throw std::invalid_argument("realized records do not match the fleet");
  }
  for (const DayRecord& r : realized) {
    if (static_cast<int>(r.avail.size()) != n_t ||
        static_cast<int>(r.cons.size()) != n_t) {
      throw std::invalid_argument("realized record horizon mismatch");
    }
  }

  ModelArtifacts art;
  art.kind = ModelKind::kDeterministic;
  art.feasibility = true;
  art.horizon = horizon;
  art.n_evs = n_v;
  Builder b(art);
  std::vector<EvBlock> blocks;
  for (int v = 0; v < n_v; ++v) {
    const std::vector<double> alpha(realized[v].avail.begin(),
                                    realized[v].avail.end());
    blocks.push_back(battery_block(b, fleet[v], v, -1, alpha,
                                   realized[v].cons, false, 1.0,
                                   params.pen_balance, horizon));
  }
  for (int t = 0; t < n_t; ++t) {
    std::vector<lp::Term> bal;
    for (int v = 0; v < n_v; ++v) {
      bal.push_back({blocks[v].c[t], 1.0});
      bal.push_back({blocks[v].d[t], -1.0});
    }
    if (p[t] < 0.0) {
      const int pm = b.var(Role::kUnmetSale, -1, t, -1, 0.0, lp::kInf);
      art.model.set_objective(pm, params.pen_sale * horizon.period_hours);
      bal.push_back({pm, -1.0});
    }
    b.row(tags::kRealizedBalance, -1, t, -1, std::move(bal),
          lp::Sense::kLessEqual, p[t]);
  }
  return art;
}

}  // namespace evagg::models
