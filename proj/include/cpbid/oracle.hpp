#pragma once

// Brute-force offline optimum on small instances and realization-level
// checks of the reward, RoS and interval-width guarantees.
//
// Under a truthful step-allocation mechanism, winning auction t costs exactly
// its price threshold c_t, so offline bidding reduces to choosing a subset of
// auctions to win.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpbid/ledger.hpp"

namespace cpbid::oracle {

inline constexpr std::size_t kMaxOfflineHorizon = 24;
inline constexpr std::size_t kMaxGridHorizon = 12;

// Absolute slack on constraint and objective comparisons.
inline constexpr double kTolerance = 1e-12;
inline constexpr double kCheckTolerance = 1e-9;

struct OfflineInstance {
  std::vector<double> true_values;
  std::vector<double> adjusted_values;
  std::vector<double> costs;
  double budget = 0.0;

  std::size_t horizon() const { return costs.size(); }
};

enum class ValueField { True, Adjusted };

struct OracleSolution {
  std::vector<std::size_t> winning_set;  // 0-based, ascending
  double reward = 0.0;
  double spend = 0.0;
  double ros_slack = 0.0;  // sum of chosen values - spend
};

// Exhaustive search over all 2^T win sets, maximizing the chosen value field
// subject to spend <= budget and spend <= value. Ties go to the smaller
// spend, then the lexicographically smaller set. Throws for T > 24.
OracleSolution offline_optimum(const OfflineInstance& instance, ValueField field);

struct Prop1Witness {
  bool holds = false;
  double grid_reward = 0.0;   // optimum over values on {0, u/2, u} in each interval
  double upper_reward = 0.0;  // optimum with every value at its upper bound u
  std::vector<std::size_t> winning_set;
  std::vector<double> values;  // chosen values of the witness, all at upper bounds
};

// Joint enumeration of win sets and per-auction values on the grid
// {0, u_t/2, u_t} inside [0, u_t]; holds when no grid configuration beats the
// configuration with every value at its upper bound. Throws for T > 12.
Prop1Witness verify_prop1(const OfflineInstance& instance, std::span<const double> upper_bounds);

struct Theorem3Report {
  bool holds = false;
  std::string skipped_reason;
  double ros = 0.0;
  double ros_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double d_max = 0.0;
  double v_min = 0.0;
};

// (1 - d_max/v_min) RoS <= RoS_hat <= (1 + d_max/v_min) RoS within 1e-9.
// Throws UndefinedError on zero spend; v_min = 0 yields a skipped report.
Theorem3Report check_theorem3(const RunLedger& ledger);

struct Theorem2Report {
  bool holds = false;
  std::string skipped_reason;
  // (a) adjusted offline optimum >= true offline optimum
  double adjusted_optimum = 0.0;
  double true_optimum = 0.0;
  // (b) sum v_hat x <= (1 + d_max/v_min) sum v x for the realized bids
  double realized_adjusted_reward = 0.0;
  double widened_true_reward = 0.0;
};

// Skipped when some round has v_true > v_hat (the guarantee conditions on
// coverage) or when v_min = 0.
Theorem2Report check_theorem2_realization(const RunLedger& ledger, const OracleSolution& oracle_true,
                                          const OracleSolution& oracle_adj);

// d_max <= 2 (prediction_error_sup + approximation_error_sup).
bool check_prop2(double d_max, double prediction_error_sup, double approximation_error_sup);

// Win/lose instance over a ledger: values from the ledger, costs from the
// price thresholds, budget from the ledger.
OfflineInstance instance_from_ledger(const RunLedger& ledger);

// One serialized verifier record.
struct CheckRecord {
  std::string check;
  std::string instance_id;
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string skipped_reason;
};

std::vector<CheckRecord> to_records(const Theorem3Report& r, const std::string& instance_id);
std::vector<CheckRecord> to_records(const Theorem2Report& r, const std::string& instance_id);
CheckRecord to_record(const Prop1Witness& w, const std::string& instance_id);

// JSON array of {check, instance_id, holds, lhs, rhs, skipped_reason}.
std::string records_to_json(std::span<const CheckRecord> records);

}  // namespace cpbid::oracle
