#pragma once

// Replay of request sequences through a mechanism for one bidding method.
//
// All inputs of a run (sampled auctions, values, pre-drawn clicks and
// conversions, tie coins) are materialized once per (campaign, period, seed)
// in a RunInput and shared by every method, so methods compared on a seed see
// identical randomness. Batches of runs execute with OpenMP; the serial
// executor is the reference the parallel one is tested against.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cpbid/config.hpp"
#include "cpbid/conformal.hpp"
#include "cpbid/data.hpp"
#include "cpbid/ledger.hpp"

namespace cpbid::runner {

// Calibration products shared read-only by every run.
struct Calibration {
  data::BinScheme scheme;  // with post-hoc true CVR
  conformal::CalibrationTable table;
  conformal::AdjustmentCache adjustments;
  std::vector<conformal::CalibrationRow> rows;
};

Calibration calibrate(std::span<const data::AuctionRecord> calibration_records, const ExperimentConfig& config);

struct RoundInput {
  double pcvr = 0.0;
  conformal::BinId bin = 0;
  double v_true = 0.0;
  double pctr = 0.0;
  std::vector<double> competing;  // normalized by tCPA
  double highest_competing = 0.0;
  bool click = false;
  bool conversion = false;
  bool tie_coin = false;
};

struct RunInput {
  std::int64_t campaign_id = 0;
  std::int64_t period = 0;
  std::uint64_t seed = 0;
  double budget = 0.0;           // normalized
  double min_bid_budget = 0.0;   // dual agent's budget gate
  double max_price = 0.0;        // largest price threshold in the sequence
  std::vector<RoundInput> rounds;
};

// Samples min(horizon, period size) auctions of a test period (kept in log
// order) and pre-draws every event from per-purpose streams of `seed`.
RunInput build_run_input(std::span<const data::AuctionRecord> period_records, const Calibration& calibration,
                         const data::CampaignConfig& campaign, const ExperimentConfig& config,
                         std::int64_t period, std::uint64_t seed);

struct RunTask {
  std::size_t input = 0;  // index into the RunInput list
  Method method = Method::Adjust;
};

// Bid/update loop for one method. Throws InvariantError if the ledger spends
// more than the budget.
RunLedger simulate_run(const RunInput& input, Method method, const Calibration& calibration,
                       const ExperimentConfig& config);

std::vector<RunLedger> execute_runs(std::span<const RunInput> inputs, std::span<const RunTask> tasks,
                                    const Calibration& calibration, const ExperimentConfig& config);

std::vector<RunLedger> execute_runs_serial(std::span<const RunInput> inputs, std::span<const RunTask> tasks,
                                           const Calibration& calibration, const ExperimentConfig& config);

std::string make_run_id(std::int64_t campaign_id, std::int64_t period, std::uint64_t seed, Method method);

}  // namespace cpbid::runner
