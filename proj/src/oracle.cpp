#include "cpbid/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "cpbid/error.hpp"
#include "cpbid/metrics.hpp"
#include <json.hpp>

namespace cpbid::oracle {

namespace {

using Mask = std::uint32_t;

void validate_instance(const OfflineInstance& inst) {
  const std::size_t t = inst.horizon();
  if (inst.true_values.size() != t || inst.adjusted_values.size() != t) {
    throw ValidationError("offline instance: value and cost vectors differ in length");
  }
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (std::size_t i = 0; i < t; ++i) {
    if (!unit(inst.true_values[i]) || !unit(inst.adjusted_values[i])) {
      throw ValidationError("offline instance: values must lie in [0,1]");
    }
    if (!(inst.costs[i] >= 0.0)) throw ValidationError("offline instance: costs must be >= 0");
  }
  if (inst.budget < 0.0) throw ValidationError("offline instance: negative budget");
}

// True when set `a` precedes set `b` in lexicographic order of their sorted
// index lists.
bool lexicographically_less(Mask a, Mask b) {
  if (a == b) return false;
  const Mask diff = a ^ b;
  const int i = std::countr_zero(diff);
  const Mask holder = (a >> i) & 1u ? a : b;
  const Mask other = holder == a ? b : a;
  const Mask above = ~((Mask{2} << i) - 1u);
  const bool other_continues = (other & above) != 0;
  const bool a_smaller = other_continues ? holder == a : other == a;
  return a_smaller;
}

struct SubsetSearch {
  std::span<const double> values;
  std::span<const double> costs;
  double budget;

  bool found = false;
  Mask best_mask = 0;
  double best_reward = 0.0;
  double best_spend = 0.0;

  void consider(Mask mask, double reward, double spend) {
    if (spend > budget + kTolerance || spend > reward + kTolerance) return;
    if (!found) {
      found = true;
    } else if (reward < best_reward - kTolerance) {
      return;
    } else if (reward <= best_reward + kTolerance) {
      if (spend > best_spend + kTolerance) return;
      if (spend >= best_spend - kTolerance && !lexicographically_less(mask, best_mask)) return;
    }
    best_mask = mask;
    best_reward = reward;
    best_spend = spend;
  }

  void run(std::size_t i, Mask mask, double reward, double spend) {
    if (i == costs.size()) {
      consider(mask, reward, spend);
      return;
    }
    run(i + 1, mask, reward, spend);
    run(i + 1, mask | (Mask{1} << i), reward + values[i], spend + costs[i]);
  }
};

std::vector<std::size_t> mask_to_set(Mask mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

struct GridSearch {
  std::span<const double> upper;
  std::span<const double> costs;
  double budget;
  double best = 0.0;

  void run(std::size_t i, double reward, double spend) {
    if (i == costs.size()) {
      if (spend <= budget + kTolerance && spend <= reward + kTolerance) best = std::max(best, reward);
      return;
    }
    run(i + 1, reward, spend);
    const double u = upper[i];
    for (double v : {0.0, 0.5 * u, u}) run(i + 1, reward + v, spend + costs[i]);
  }
};

bool covered(const RunLedger& ledger) {
  return std::all_of(ledger.rows.begin(), ledger.rows.end(),
                     [](const LedgerRow& r) { return r.v_true <= r.v_hat; });
}

}  // namespace

OracleSolution offline_optimum(const OfflineInstance& instance, ValueField field) {
  validate_instance(instance);
  if (instance.horizon() > kMaxOfflineHorizon) {
    throw ValidationError("offline optimum limited to " + std::to_string(kMaxOfflineHorizon) +
                          " auctions");
  }
  const auto& values = field == ValueField::True ? instance.true_values : instance.adjusted_values;
  SubsetSearch search{values, instance.costs, instance.budget};
  search.run(0, 0, 0.0, 0.0);

  OracleSolution sol;
  sol.winning_set = mask_to_set(search.best_mask);
  sol.reward = search.best_reward;
  sol.spend = search.best_spend;
  sol.ros_slack = sol.reward - sol.spend;
  return sol;
}

Prop1Witness verify_prop1(const OfflineInstance& instance, std::span<const double> upper_bounds) {
  if (upper_bounds.size() != instance.horizon()) {
    throw ValidationError("verify_prop1: one upper bound per auction required");
  }
  if (instance.horizon() > kMaxGridHorizon) {
    throw ValidationError("verify_prop1 limited to " + std::to_string(kMaxGridHorizon) + " auctions");
  }
  OfflineInstance upper = instance;
  upper.adjusted_values.assign(upper_bounds.begin(), upper_bounds.end());
  const auto at_upper = offline_optimum(upper, ValueField::Adjusted);

  GridSearch grid{upper_bounds, instance.costs, instance.budget};
  grid.run(0, 0.0, 0.0);

  Prop1Witness w;
  w.grid_reward = grid.best;
  w.upper_reward = at_upper.reward;
  w.holds = grid.best <= at_upper.reward + kTolerance;
  w.winning_set = at_upper.winning_set;
  for (auto i : w.winning_set) w.values.push_back(upper_bounds[i]);
  return w;
}

Theorem3Report check_theorem3(const RunLedger& ledger) {
  const auto ros = metrics::ros_summary(ledger);  // throws on zero spend
  Theorem3Report r;
  r.ros = ros.ros_true;
  r.ros_hat = ros.ros_adjusted;
  r.d_max = ros.d_max;
  r.v_min = ros.v_min;
  if (!(ros.v_min > 0.0)) {
    r.skipped_reason = "v_min = 0 violates the positive minimum value assumption";
    return r;
  }
  const double xi = ros.d_max / ros.v_min;
  r.lower = (1.0 - xi) * ros.ros_true;
  r.upper = (1.0 + xi) * ros.ros_true;
  r.holds = r.lower - kCheckTolerance <= r.ros_hat && r.ros_hat <= r.upper + kCheckTolerance;
  return r;
}

Theorem2Report check_theorem2_realization(const RunLedger& ledger, const OracleSolution& oracle_true,
                                          const OracleSolution& oracle_adj) {
  Theorem2Report r;
  r.adjusted_optimum = oracle_adj.reward;
  r.true_optimum = oracle_true.reward;
  if (!covered(ledger)) {
    r.skipped_reason = "coverage event failed: some v_true exceeds v_hat";
    return r;
  }
  const auto ext = metrics::horizon_extremes(ledger);
  if (!(ext.v_min > 0.0)) {
    r.skipped_reason = "v_min = 0 violates the positive minimum value assumption";
    return r;
  }
  double adjusted = 0.0;
  double truth = 0.0;
  for (const auto& row : ledger.rows) {
    adjusted += row.v_hat * row.allocation;
    truth += row.v_true * row.allocation;
  }
  r.realized_adjusted_reward = adjusted;
  r.widened_true_reward = (1.0 + ext.d_max / ext.v_min) * truth;
  r.holds = r.adjusted_optimum >= r.true_optimum - kCheckTolerance &&
            r.realized_adjusted_reward <= r.widened_true_reward + kCheckTolerance;
  return r;
}

bool check_prop2(double d_max, double prediction_error_sup, double approximation_error_sup) {
  return d_max <= 2.0 * (prediction_error_sup + approximation_error_sup) + kTolerance;
}

OfflineInstance instance_from_ledger(const RunLedger& ledger) {
  OfflineInstance inst;
  inst.budget = ledger.budget;
  for (const auto& row : ledger.rows) {
    inst.true_values.push_back(row.v_true);
    inst.adjusted_values.push_back(row.v_hat);
    inst.costs.push_back(row.price_threshold);
  }
  return inst;
}

std::vector<CheckRecord> to_records(const Theorem3Report& r, const std::string& instance_id) {
  const bool skipped = !r.skipped_reason.empty();
  return {
      {"theorem3_lower", instance_id, r.lower - kCheckTolerance <= r.ros_hat && !skipped, r.lower,
       r.ros_hat, r.skipped_reason},
      {"theorem3_upper", instance_id, r.ros_hat <= r.upper + kCheckTolerance && !skipped, r.ros_hat,
       r.upper, r.skipped_reason},
  };
}

std::vector<CheckRecord> to_records(const Theorem2Report& r, const std::string& instance_id) {
  const bool skipped = !r.skipped_reason.empty();
  return {
      {"theorem2_optimum", instance_id,
       !skipped && r.adjusted_optimum >= r.true_optimum - kCheckTolerance, r.adjusted_optimum,
       r.true_optimum, r.skipped_reason},
      {"theorem2_realized", instance_id,
       !skipped && r.realized_adjusted_reward <= r.widened_true_reward + kCheckTolerance,
       r.realized_adjusted_reward, r.widened_true_reward, r.skipped_reason},
  };
}

CheckRecord to_record(const Prop1Witness& w, const std::string& instance_id) {
  return {"prop1", instance_id, w.holds, w.grid_reward, w.upper_reward, ""};
}

std::string records_to_json(std::span<const CheckRecord> records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["check"] = r.check;
    j["instance_id"] = r.instance_id;
    j["holds"] = r.holds;
    j["lhs"] = std::isfinite(r.lhs) ? nlohmann::ordered_json(r.lhs) : nlohmann::ordered_json(nullptr);
    j["rhs"] = std::isfinite(r.rhs) ? nlohmann::ordered_json(r.rhs) : nlohmann::ordered_json(nullptr);
    j["skipped_reason"] =
        r.skipped_reason.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.skipped_reason);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace cpbid::oracle
