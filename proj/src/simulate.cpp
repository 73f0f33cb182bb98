#include "cpbid/simulate.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "cpbid/agents.hpp"
#include "cpbid/error.hpp"
#include "cpbid/mechanism.hpp"
#include "cpbid/rng.hpp"

namespace cpbid::runner {

namespace {

mechanism::AuctionOutcome run_auction(double bid, const RoundInput& r, const ExperimentConfig& config) {
  if (config.mechanism == MechanismKind::SecondPrice) {
    return mechanism::second_price_outcome(bid, {r.competing, config.tie_rule, r.tie_coin});
  }
  // Competitors are ranked with the agent's pCTR, so their highest eCPM is
  // highest_competing * pctr * 1000 and the threshold price is highest_competing.
  return mechanism::ecpm_outcome(bid, {r.pctr, r.highest_competing * r.pctr * 1000.0, r.click});
}

bool biddable(const RoundInput& r, const ExperimentConfig& config) {
  return config.mechanism == MechanismKind::SecondPrice || r.pctr > 0.0;
}

double value_for(Method method, const RoundInput& r, const Calibration& calibration) {
  switch (method) {
    case Method::Adjust: return conformal::adjusted_value(r.pcvr, calibration.adjustments(r.bin)).v_hat;
    case Method::Pred: return r.pcvr;
    case Method::True: return r.v_true;
    case Method::Ucb: break;
  }
  throw InvariantError("value_for called for a method without a value source");
}

void dual_loop(const RunInput& input, Method method, const Calibration& calibration,
               const ExperimentConfig& config, RunLedger& ledger) {
  const auto horizon = static_cast<std::int64_t>(input.rounds.size());
  auto state = agents::init_dual_state(input.budget, horizon);
  for (const auto& r : input.rounds) {
    const double v_hat = value_for(method, r, calibration);
    const double bid = biddable(r, config) ? agents::compute_bid(state, v_hat, input.min_bid_budget) : 0.0;
    const auto outcome = run_auction(bid, r, config);
    ledger.rows.push_back({state.round, bid, outcome.won, outcome.allocation, outcome.payment, state.lambda,
                           state.mu, state.remaining_budget, v_hat, r.v_true, outcome.price_threshold,
                           r.click, r.conversion});
    state = agents::update_duals(state, v_hat, outcome);
  }
}

void ucb_loop(const RunInput& input, const ExperimentConfig& config, RunLedger& ledger) {
  const double max_bid = input.max_price > 0.0 ? input.max_price : 1.0;
  auto state = agents::init_ucb_state(max_bid, input.budget, config.ucb_grid_size, config.ucb_cost_floor);
  auto rng = make_stream(input.seed, StreamPurpose::Ucb, static_cast<std::uint64_t>(input.period));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::int64_t round = 1;
  for (const auto& r : input.rounds) {
    const auto arm = biddable(r, config) ? agents::ucb_select_arm(state, rng) : std::nullopt;
    const double bid = arm ? state.grid[*arm] : 0.0;
    const auto outcome = run_auction(bid, r, config);
    ledger.rows.push_back({round++, bid, outcome.won, outcome.allocation, outcome.payment, nan, nan,
                           state.remaining_budget, nan, r.v_true, outcome.price_threshold, r.click,
                           r.conversion});
    if (arm) {
      state = agents::ucb_update(std::move(state), *arm, outcome, r.conversion && outcome.allocation > 0.0);
    }
  }
}

}  // namespace

Calibration calibrate(std::span<const data::AuctionRecord> calibration_records, const ExperimentConfig& config) {
  if (calibration_records.empty()) throw ConfigError("no calibration records in the calibration periods");
  std::vector<double> pcvrs;
  pcvrs.reserve(calibration_records.size());
  for (const auto& r : calibration_records) pcvrs.push_back(r.pcvr);
  auto scheme = data::BinScheme::build(pcvrs, config.n_bins);
  auto rng = make_stream(config.calibration_seed, StreamPurpose::PosthocCvr);
  scheme = data::posthoc_true_cvr(calibration_records, scheme, rng);

  std::vector<conformal::CalibrationRow> rows;
  rows.reserve(calibration_records.size());
  for (const auto& r : calibration_records) {
    const auto bin = scheme.assign(r.pcvr);
    rows.push_back({bin, r.pcvr, scheme.true_cvr(bin)});
  }
  auto table = conformal::CalibrationTable::fit(rows);
  conformal::AdjustmentCache cache(table, miscoverage(config), config.unknown_bin);
  return Calibration{std::move(scheme), std::move(table), std::move(cache), std::move(rows)};
}

RunInput build_run_input(std::span<const data::AuctionRecord> period_records, const Calibration& calibration,
                         const data::CampaignConfig& campaign, const ExperimentConfig& config,
                         std::int64_t period, std::uint64_t seed) {
  if (period_records.empty()) {
    throw ConfigError("test period " + std::to_string(period) + " has no auctions");
  }
  const auto p = static_cast<std::uint64_t>(period);
  std::vector<std::size_t> all(period_records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  const auto horizon = static_cast<std::size_t>(config.horizon);
  if (horizon >= all.size()) {
    chosen = std::move(all);
  } else {
    auto sampling = make_stream(seed, StreamPurpose::Sampling, p);
    chosen.reserve(horizon);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), horizon, sampling);
  }

  auto clicks = make_stream(seed, StreamPurpose::Click, p);
  auto conversions = make_stream(seed, StreamPurpose::Conversion, p);
  auto ties = make_stream(seed, StreamPurpose::TieBreak, p);

  RunInput in;
  in.campaign_id = campaign.campaign_id;
  in.period = period;
  in.seed = seed;
  in.budget = campaign.budget / campaign.tcpa;
  in.rounds.reserve(chosen.size());
  for (auto idx : chosen) {
    const auto& rec = period_records[idx];
    RoundInput r;
    r.pcvr = rec.pcvr;
    r.bin = calibration.scheme.assign(rec.pcvr);
    r.v_true = calibration.scheme.true_cvr(r.bin);
    r.pctr = rec.pctr;
    r.competing.reserve(rec.competing_bids.size());
    for (double b : rec.competing_bids) r.competing.push_back(b / campaign.tcpa);
    r.highest_competing = *std::max_element(r.competing.begin(), r.competing.end());
    r.click = data::sample_event(rec.pctr, clicks);
    r.conversion = data::sample_event(r.v_true, conversions);
    r.tie_coin = uniform01(ties) < 0.5;
    if (biddable(r, config)) in.max_price = std::max(in.max_price, r.highest_competing);
    in.rounds.push_back(std::move(r));
  }
  in.min_bid_budget = config.min_bid_budget.value_or(in.max_price);
  return in;
}

std::string make_run_id(std::int64_t campaign_id, std::int64_t period, std::uint64_t seed, Method method) {
  std::ostringstream id;
  id << 'c' << campaign_id << "_p" << period << "_s" << seed << '_' << to_string(method);
  return id.str();
}

RunLedger simulate_run(const RunInput& input, Method method, const Calibration& calibration,
                       const ExperimentConfig& config) {
  RunLedger ledger;
  ledger.run_id = make_run_id(input.campaign_id, input.period, input.seed, method);
  ledger.method = std::string(to_string(method));
  ledger.campaign_id = input.campaign_id;
  ledger.period = input.period;
  ledger.seed = input.seed;
  ledger.budget = input.budget;
  ledger.horizon = static_cast<std::int64_t>(input.rounds.size());
  ledger.rows.reserve(input.rounds.size());

  const auto start = std::chrono::steady_clock::now();
  if (method == Method::Ucb) {
    ucb_loop(input, config, ledger);
  } else {
    dual_loop(input, method, calibration, config, ledger);
  }
  const auto stop = std::chrono::steady_clock::now();
  if (config.record_wall_time) ledger.wall_time_s = std::chrono::duration<double>(stop - start).count();

  const double spend = ledger.total_payment();
  if (spend > ledger.budget) {
    std::ostringstream msg;
    msg << "run " << ledger.run_id << " spent " << spend << " over budget " << ledger.budget;
    throw InvariantError(msg.str());
  }
  return ledger;
}

std::vector<RunLedger> execute_runs(std::span<const RunInput> inputs, std::span<const RunTask> tasks,
                                    const Calibration& calibration, const ExperimentConfig& config) {
  std::vector<RunLedger> out(tasks.size());
  std::exception_ptr failure;
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const auto& task = tasks[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = simulate_run(inputs[task.input], task.method, calibration, config);
    } catch (...) {
#pragma omp critical(cpbid_run_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<RunLedger> execute_runs_serial(std::span<const RunInput> inputs, std::span<const RunTask> tasks,
                                           const Calibration& calibration, const ExperimentConfig& config) {
  std::vector<RunLedger> out;
  out.reserve(tasks.size());
  for (const auto& task : tasks) out.push_back(simulate_run(inputs[task.input], task.method, calibration, config));
  return out;
}

}  // namespace cpbid::runner
