#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "evagg/models.hpp"
#include "evagg/oracles.hpp"

namespace evagg::models {
namespace {

double at(const ModelArtifacts& art, const std::vector<double>& x, Role role,
          int ev, int t, int w) {
  const int j = art.find(role, ev, t, w);
  return j < 0 ? 0.0 : x[j];
}

[[noreturn]] void violated(const char* tag, const std::string& where,
                           double amount) {
  throw std::runtime_error(std::string("decoded schedule violates ") + tag +
                           " at " + where + " by " + std::to_string(amount));
}

std::string where(int v, int t, int w) {
  std::string s = "EV " + std::to_string(v);
  if (t >= 0) s += " period " + std::to_string(t);
  if (w >= 0) s += " scenario " + std::to_string(w);
  return s;
}

EvSchedule read_schedule(const ModelArtifacts& art,
                         const std::vector<double>& x, const EvParams& ev,
                         int v, int w) {
  const int n_t = art.horizon.n_periods;
  EvSchedule s;
  const bool robust = art.kind == ModelKind::kRobust;
  for (int t = 0; t < n_t; ++t) {
    s.c.push_back(at(art, x, Role::kCharge, v, t, w));
    s.d.push_back(at(art, x, Role::kDischarge, v, t, w));
    s.e.push_back(at(art, x, Role::kEnergy, v, t, w));
    s.s.push_back(at(art, x, Role::kSlack, v, t, w));
    s.cdeg.push_back(at(art, x, Role::kDegradation, v, t, w));
    if (robust) {
      s.tau.push_back(at(art, x, Role::kTransport, v, t, w));
      s.zc.push_back(at(art, x, Role::kChargeProduct, v, t, w));
      s.zd.push_back(at(art, x, Role::kDischargeProduct, v, t, w));
      s.alpha.push_back(
          static_cast<int>(std::lround(at(art, x, Role::kAlpha, v, t, w))));
    }
  }
  // Invariants every model shares.
  for (int t = 0; t < n_t; ++t) {
    if (s.c[t] < -kDecodeTol || s.c[t] > ev.c_max + kDecodeTol) {
      violated(tags::kChargeLimit, where(v, t, w), s.c[t]);
    }
    if (s.d[t] < -kDecodeTol || s.d[t] > ev.d_max + kDecodeTol) {
      violated(tags::kDischargeLimit, where(v, t, w), s.d[t]);
    }
    if (s.e[t] < ev.e_min - kDecodeTol || s.e[t] > ev.e_max + kDecodeTol) {
      violated(tags::kEnergyLimits, where(v, t, w), s.e[t]);
    }
    if (robust && s.d[t] > ev.d_max * s.alpha[t] + kDecodeTol) {
      violated(tags::kDischargeAvailability, where(v, t, w), s.d[t]);
    }
    if (robust) {
      const double rc = std::abs(s.zc[t] - s.alpha[t] * s.c[t]);
      if (rc > kDecodeTol) {
        violated(tags::kMcCormickChargeEnvelope, where(v, t, w), rc);
      }
      const double rd = std::abs(s.zd[t] - s.alpha[t] * s.d[t]);
      if (rd > kDecodeTol) {
        violated(tags::kMcCormickDischargeEnvelope, where(v, t, w), rd);
      }
    }
  }
  const double term = std::abs(s.e[n_t - 1] - ev.e_init);
  if (term > kDecodeTol) violated(tags::kTerminalEnergy, where(v, -1, w), term);
  if (robust) {
    double total = 0.0;
    for (double tau : s.tau) total += tau;
    const double gap = std::abs(total - ev.daily_demand);
    if (gap > kDecodeTol * std::max(1.0, ev.daily_demand)) {
      violated(tags::kTransportDemand, where(v, -1, w), gap);
    }
  }
  return s;
}

LowerLevelDuals read_duals(const ModelArtifacts& art,
                           const std::vector<double>& x, int v) {
  LowerLevelDuals dual;
  dual.zeta_drain = at(art, x, Role::kDrainZeta, v, -1, -1);
  dual.zeta_interaction = at(art, x, Role::kInteractionZeta, v, -1, -1);
  for (int t = 0; t < art.horizon.n_periods; ++t) {
    dual.beta_lo_drain.push_back(at(art, x, Role::kDrainBetaLo, v, t, -1));
    dual.beta_hi_drain.push_back(at(art, x, Role::kDrainBetaHi, v, t, -1));
    dual.beta_lo_interaction.push_back(
        at(art, x, Role::kInteractionBetaLo, v, t, -1));
    dual.beta_hi_interaction.push_back(
        at(art, x, Role::kInteractionBetaHi, v, t, -1));
  }
  return dual;
}

}  // namespace

DispatchSolution decode(const ModelArtifacts& art, const std::vector<double>& x,
                        const FleetSpec& fleet, const AggregatorParams& params) {
  if (x.size() != static_cast<std::size_t>(art.model.num_variables())) {
    throw std::invalid_argument("solution vector does not match the model");
  }
  if (static_cast<int>(fleet.size()) != art.n_evs) {
    throw std::invalid_argument("fleet does not match the model");
  }
  const int n_t = art.horizon.n_periods;
  const int n_v = art.n_evs;
  DispatchSolution sol;
  sol.kind = art.kind;
  sol.objective = art.model.evaluate_objective(x);
  if (!art.feasibility) {
    for (int t = 0; t < n_t; ++t) {
      const double p = x[art.var(Role::kPower, -1, t, -1)];
      if (std::abs(p) > params.feeder_cap + kDecodeTol) {
        violated(tags::kFeederCapacity, "period " + std::to_string(t), p);
      }
      sol.p.push_back(p);
    }
  }

  if (art.kind == ModelKind::kStochastic) {
    sol.probabilities = art.probabilities;
    for (int w = 0; w < art.n_scenarios; ++w) {
      std::vector<EvSchedule> evs;
      for (int v = 0; v < n_v; ++v) {
        evs.push_back(read_schedule(art, x, fleet[v], v, w));
      }
      for (int t = 0; t < n_t; ++t) {
        double net = 0.0;
        for (const auto& s : evs) net += s.c[t] - s.d[t];
        if (net > sol.p[t] + kDecodeTol * std::max(1.0, std::abs(sol.p[t]))) {
          violated(tags::kScenarioBalance,
                   "period " + std::to_string(t) + " scenario " +
                       std::to_string(w),
                   net - sol.p[t]);
        }
      }
      sol.scenarios.push_back(std::move(evs));
    }
    sol.evs = sol.scenarios.front();
    return sol;
  }

  for (int v = 0; v < n_v; ++v) {
    sol.evs.push_back(read_schedule(art, x, fleet[v], v, -1));
  }
  if (art.kind == ModelKind::kRobust) {
    for (int v = 0; v < n_v; ++v) sol.duals.push_back(read_duals(art, x, v));
  }
  if (!art.feasibility) {
    for (int t = 0; t < n_t; ++t) {
      double net = 0.0;
      for (const auto& s : sol.evs) net += s.c[t] - s.d[t];
      const double gap = std::abs(net - sol.p[t]);
      if (gap > kDecodeTol * std::max(1.0, std::abs(sol.p[t]))) {
        violated(tags::kPowerBalance, "period " + std::to_string(t), gap);
      }
    }
  }
  return sol;
}

FeasibilityOutcome read_feasibility(const ModelArtifacts& art,
                                    const std::vector<double>& x) {
  if (!art.feasibility) {
    throw std::invalid_argument("not a feasibility model");
  }
  FeasibilityOutcome out;
  out.objective = art.model.evaluate_objective(x);
  const int n_t = art.horizon.n_periods;
  for (int v = 0; v < art.n_evs; ++v) {
    for (int t = 0; t < n_t; ++t) out.slack_kwh += x[art.var(Role::kSlack, v, t)];
  }
  for (int t = 0; t < n_t; ++t) {
    const int j = art.find(Role::kUnmetSale, -1, t, -1);
    if (j >= 0) out.unmet_sale_kwh += x[j] * art.horizon.period_hours;
  }
  return out;
}

double max_simultaneous(const DispatchSolution& sol) {
  double worst = 0.0;
  auto scan = [&](const std::vector<EvSchedule>& evs) {
    for (const auto& s : evs) {
      for (std::size_t t = 0; t < s.c.size(); ++t) {
        worst = std::max(worst, std::min(s.c[t], s.d[t]));
      }
    }
  };
  scan(sol.evs);
  for (const auto& w : sol.scenarios) scan(w);
  return worst;
}

RobustAudit audit_robust(const DispatchSolution& sol, const FleetSpec& fleet,
                         const std::vector<UncertaintySet>& sets,
                         const Horizon& horizon) {
  if (sol.kind != ModelKind::kRobust) {
    throw std::invalid_argument("audit needs a robust schedule");
  }
  if (sol.evs.size() != fleet.size() || sets.size() != fleet.size() ||
      sol.duals.size() != fleet.size()) {
    throw std::invalid_argument("audit inputs differ in size");
  }
  const double h = horizon.period_hours;
  RobustAudit audit;
  for (std::size_t v = 0; v < fleet.size(); ++v) {
    const EvParams& ev = fleet[v];
    const EvSchedule& s = sol.evs[v];
    const LowerLevelDuals& du = sol.duals[v];
    const auto drain =
        oracles::solve_lower_A(oracles::drain_instance(ev, s.c, s.d, sets[v], h));
    audit.worst_drain_margin =
        std::min(audit.worst_drain_margin, drain.objective - ev.daily_demand);

    const auto inter = oracles::solve_lower_B(
        oracles::interaction_instance(ev, s.c, s.d, sets[v], h));
    double dual_obj = sets[v].k_min * du.zeta_interaction;
    for (int t = 0; t < horizon.n_periods; ++t) {
      dual_obj += sets[v].a_lo[t] * du.beta_lo_interaction[t] +
                  sets[v].a_hi[t] * du.beta_hi_interaction[t];
    }
    const double scale = std::max(1.0, std::abs(inter.objective));
    audit.strong_duality_residual =
        std::max(audit.strong_duality_residual,
                 std::abs(dual_obj - inter.objective) / scale);

    for (int t = 0; t < horizon.n_periods; ++t) {
      audit.linearization_residual =
          std::max({audit.linearization_residual,
                    std::abs(s.zc[t] - s.alpha[t] * s.c[t]),
                    std::abs(s.zd[t] - s.alpha[t] * s.d[t])});
    }
  }
  audit.simultaneous = max_simultaneous(sol);
  return audit;
}

}  // namespace evagg::models
