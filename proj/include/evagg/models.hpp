#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "evagg/domain.hpp"
#include "evagg/estimation.hpp"
#include "evagg/lp_core.hpp"

namespace evagg::models {

enum class Role {
  kPower,
  kCharge,
  kDischarge,
  kEnergy,
  kSlack,
  kDegradation,
  kTransport,
  kAlpha,
  kChargeProduct,     // z^c = alpha * c
  kDischargeProduct,  // z^d = alpha * d
  kDrainZeta,
  kDrainBetaLo,
  kDrainBetaHi,
  kInteractionZeta,
  kInteractionBetaLo,
  kInteractionBetaHi,
  kUnmetSale,
};

const char* to_string(Role role);

struct VarKey {
  Role role;
  int ev = -1;
  int t = -1;
  int scenario = -1;

  bool operator==(const VarKey&) const = default;
};

struct VarKeyHash {
  std::size_t operator()(const VarKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.role);
    h = h * 1000003u + static_cast<std::size_t>(k.ev + 1);
    h = h * 1000003u + static_cast<std::size_t>(k.t + 1);
    h = h * 1000003u + static_cast<std::size_t>(k.scenario + 1);
    return h;
  }
};

// Constraint tags. Every row carries exactly one.
namespace tags {
inline constexpr const char* kPowerBalance = "power_balance";
inline constexpr const char* kScenarioBalance = "scenario_balance";
inline constexpr const char* kRealizedBalance = "realized_balance";
inline constexpr const char* kBatteryDynamics = "battery_dynamics";
inline constexpr const char* kTerminalEnergy = "terminal_energy";
inline constexpr const char* kDegradation = "degradation";
inline constexpr const char* kTransportDemand = "transport_demand";
inline constexpr const char* kTransportPlacement = "transport_placement";
inline constexpr const char* kDischargeAvailability = "discharge_availability";
inline constexpr const char* kDrainDualObjective = "drain_dual_objective";
inline constexpr const char* kDrainDualFeasibility = "drain_dual_feasibility";
inline constexpr const char* kInteractionCount = "interaction_count";
inline constexpr const char* kInteractionDualFeasibility =
    "interaction_dual_feasibility";
inline constexpr const char* kStrongDuality = "strong_duality";
inline constexpr const char* kMcCormickChargeLower = "mccormick_charge_lower";
inline constexpr const char* kMcCormickChargeUpper = "mccormick_charge_upper";
inline constexpr const char* kMcCormickChargeEnvelope =
    "mccormick_charge_envelope";
inline constexpr const char* kMcCormickDischargeLower =
    "mccormick_discharge_lower";
inline constexpr const char* kMcCormickDischargeUpper =
    "mccormick_discharge_upper";
inline constexpr const char* kMcCormickDischargeEnvelope =
    "mccormick_discharge_envelope";
// Column bounds standing in for simple constraints.
inline constexpr const char* kFeederCapacity = "feeder_capacity";
inline constexpr const char* kChargeLimit = "charge_limit";
inline constexpr const char* kDischargeLimit = "discharge_limit";
inline constexpr const char* kEnergyLimits = "energy_limits";
inline constexpr const char* kAvailabilityBounds = "availability_bounds";
}  // namespace tags

struct ModelArtifacts {
  lp::LinearModel model;
  ModelKind kind = ModelKind::kDeterministic;
  bool feasibility = false;
  Horizon horizon;
  int n_evs = 0;
  int n_scenarios = 1;
  std::vector<double> probabilities;  // stochastic only

  std::unordered_map<VarKey, int, VarKeyHash> vars;
  std::vector<std::string> row_tag;                   // per row
  std::map<std::string, std::vector<int>> tag_rows;   // tag -> rows
  std::map<std::string, std::vector<int>> bound_tags;  // tag -> columns

  // Column of a registered variable; throws std::out_of_range.
  int var(Role role, int ev = -1, int t = -1, int scenario = -1) const;
  // -1 when absent.
  int find(Role role, int ev = -1, int t = -1, int scenario = -1) const;
  const std::vector<int>& rows(const std::string& tag) const;
};

// Deterministic model on expected availability alpha_hat[v][t] in [0,1]
// and expected consumption tau_hat[v][t].
ModelArtifacts build_deterministic(const FleetSpec& fleet,
                                   const std::vector<double>& prices,
                                   const std::vector<std::vector<double>>& alpha_hat,
                                   const std::vector<std::vector<double>>& tau_hat,
                                   const AggregatorParams& params,
                                   const Horizon& horizon = {});

ModelArtifacts build_stochastic(const FleetSpec& fleet,
                                const std::vector<double>& prices,
                                const ScenarioSet& scenarios,
                                const AggregatorParams& params,
                                const Horizon& horizon = {});

// Single-level robust model. Each EV's daily_demand is the expected
// transport energy. Throws std::invalid_argument on an infeasible
// uncertainty set or an unplaceable transport demand.
ModelArtifacts build_robust_milp(const FleetSpec& fleet,
                                 const std::vector<double>& prices,
                                 const std::vector<UncertaintySet>& sets,
                                 const AggregatorParams& params,
                                 const Horizon& horizon = {});

// Build-time diagnostics of the robust model inputs; empty when buildable.
std::vector<std::string> robust_diagnostics(const FleetSpec& fleet,
                                            const std::vector<UncertaintySet>& sets,
                                            const Horizon& horizon);

// Ex-post feasibility of a committed profile p against realized days.
ModelArtifacts build_feasibility(const FleetSpec& fleet,
                                 const std::vector<DayRecord>& realized,
                                 const std::vector<double>& p,
                                 const AggregatorParams& params,
                                 const Horizon& horizon = {});

inline constexpr double kDecodeTol = 1e-6;

// Reads the schedule out of a solved model and checks its invariants.
// Throws std::runtime_error naming the violated tag.
DispatchSolution decode(const ModelArtifacts& art, const std::vector<double>& x,
                        const FleetSpec& fleet, const AggregatorParams& params);

struct FeasibilityOutcome {
  double objective = 0.0;
  double slack_kwh = 0.0;        // sum of s
  double unmet_sale_kwh = 0.0;   // sum of p^- times period length
};

FeasibilityOutcome read_feasibility(const ModelArtifacts& art,
                                    const std::vector<double>& x);

// Post-solve checks of a robust schedule against the greedy oracles.
struct RobustAudit {
  double worst_drain_margin = lp::kInf;   // min_v psi_wc - demand
  double strong_duality_residual = 0.0;   // max_v |dual obj - greedy B|
  double linearization_residual = 0.0;    // max |z - alpha * (c or d)|
  double simultaneous = 0.0;              // max min(c, d)

  bool passed(double tol = 1e-6) const {
    return worst_drain_margin >= -tol && strong_duality_residual <= tol &&
           linearization_residual <= tol && simultaneous <= tol;
  }
};

RobustAudit audit_robust(const DispatchSolution& sol, const FleetSpec& fleet,
                         const std::vector<UncertaintySet>& sets,
                         const Horizon& horizon = {});

// Largest min(c, d) over every EV, period and scenario.
double max_simultaneous(const DispatchSolution& sol);

}  // namespace evagg::models
