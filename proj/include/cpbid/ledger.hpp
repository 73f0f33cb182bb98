#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cpbid {

// One simulated round. Money and values are in tCPA-normalized units
// (value = CVR, RoS target 1).
struct LedgerRow {
  std::int64_t round = 0;
  double bid = 0.0;
  bool won = false;
  double allocation = 0.0;
  double payment = 0.0;
  double lambda = 0.0;  // duals before the update; NaN for UCB
  double mu = 0.0;
  double remaining_budget = 0.0;  // before the payment of this round
  double v_hat = 0.0;             // value the agent bid with; NaN for UCB
  double v_true = 0.0;            // post-hoc true value
  double price_threshold = 0.0;
  bool click = false;       // pre-sampled, shared across methods
  bool conversion = false;  // pre-sampled, shared across methods
};

struct RunLedger {
  std::string run_id;
  std::string method;
  std::int64_t campaign_id = 0;
  std::int64_t period = 0;
  std::uint64_t seed = 0;
  double budget = 0.0;  // normalized
  std::int64_t horizon = 0;
  double wall_time_s = 0.0;
  std::vector<LedgerRow> rows;

  double total_payment() const;
};

inline constexpr const char* kLedgerHeader =
    "round,bid,won,allocation,payment,lambda,mu,remaining_budget,v_source,v_hat,v_true";

void write_ledger_csv(std::ostream& out, const RunLedger& ledger);

// Shortest round-trip decimal for a double; "inf"/"-inf"/"nan" for specials.
std::string format_double(double x);

}  // namespace cpbid
