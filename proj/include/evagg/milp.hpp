#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evagg/lp_core.hpp"

namespace evagg::milp {

inline constexpr double kIntegralityTol = 1e-6;
inline constexpr double kFeasibilityTol = 1e-6;

struct BnbConfig {
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  std::int64_t node_limit = 1'000'000;
  // Wall-clock budget; the search stops like a node limit when exceeded.
  double time_limit_seconds = lp::kInf;
  // Optional starting incumbent over all model columns. Ignored unless
  // integral and feasible within tolerance.
  std::optional<std::vector<double>> initial_solution;
  // Optional starting basis for the root relaxation.
  std::optional<lp::Basis> root_basis;
};

// Validates the config; throws std::invalid_argument on gaps <= 0 or
// node_limit < 1.
void validate(const BnbConfig& cfg);

enum class MilpStatus {
  kOptimal,
  kInfeasible,
  kGapLimit,   // a limit was reached; the incumbent is returned with its gap
  kNodeLimit,  // a limit was reached before any incumbent was found
  kUnbounded,
  kNumericalFailure,
};

std::string_view to_string(MilpStatus status);

struct MilpSolution {
  MilpStatus status = MilpStatus::kNumericalFailure;
  std::vector<double> x;  // incumbent, empty when none
  double objective = lp::kInf;
  double bound = -lp::kInf;
  double gap = lp::kInf;  // |objective - bound|
  std::int64_t nodes = 0;
  std::int64_t branches = 0;
  std::int64_t lp_iterations = 0;
  // Incumbent objective each time it improved, in order.
  std::vector<double> incumbent_history;

  bool has_incumbent() const { return !x.empty(); }
};

// Branch-and-bound over the LP relaxation. Integer columns are branched
// most-fractional first (lowest index on ties); the tree is explored depth
// first, restarting each plunge from the open node with the best bound.
MilpSolution solve_milp(const lp::LinearModel& model,
                        const BnbConfig& cfg = {});

// CPLEX-LP text. Names outside [A-Za-z][A-Za-z0-9_]* are rewritten to that
// alphabet; two names that map to the same text raise std::invalid_argument.
std::string write_lp(const lp::LinearModel& model);
void export_lp_file(const lp::LinearModel& model, const std::string& path);

// Reader for the subset of CPLEX-LP produced by write_lp (plus the usual
// section spellings). Throws std::runtime_error with a line number.
lp::LinearModel parse_lp(std::string_view text);
lp::LinearModel import_lp_file(const std::string& path);

}  // namespace evagg::milp
