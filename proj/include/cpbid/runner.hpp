#pragma once

// Experiment orchestration: load or generate data, calibrate once, replay
// every (campaign, test period, seed, method) run, then score, verify and
// write reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "cpbid/config.hpp"
#include "cpbid/data.hpp"
#include "cpbid/ledger.hpp"
#include "cpbid/oracle.hpp"
#include "cpbid/report.hpp"
#include "cpbid/simulate.hpp"

namespace cpbid::runner {

struct Experiment {
  ExperimentConfig config;
  std::vector<data::CampaignConfig> campaigns;
  std::map<std::int64_t, std::vector<data::AuctionRecord>> test_periods;
  Calibration calibration;
  std::vector<std::string> warnings;
};

std::vector<data::AuctionRecord> load_dataset(const ExperimentConfig& config);

Experiment prepare_experiment(const ExperimentConfig& config);

// RunInputs in (campaign, test period, seed) order.
std::vector<RunInput> build_run_inputs(const Experiment& experiment);

struct SimulationResult {
  std::vector<RunLedger> ledgers;  // (campaign, period, seed, method) order
  std::vector<MetricsRow> metrics;
};

enum class Execution { Parallel, Serial };

SimulationResult run_experiment(const Experiment& experiment, Execution execution = Execution::Parallel);

// For every run input, the first verify.horizon auctions are replayed by the
// Adjust agent on a proportional budget and checked against the brute-force
// offline optima (value-grid witness, realization-level reward and RoS checks).
std::vector<oracle::CheckRecord> run_verification(const Experiment& experiment);

// bin_id,beta,d with "inf" for the unattained-level sentinel.
void write_adjustments_csv(std::ostream& out, const conformal::AdjustmentCache& cache);
inline constexpr const char* kAdjustmentsHeader = "bin_id,beta,d";
inline constexpr const char* kCalibrationRowsHeader = "bin_id,mu_hat,v";

void write_calibration_rows_csv(std::ostream& out, std::span<const conformal::CalibrationRow> rows);
std::vector<conformal::CalibrationRow> read_calibration_rows_csv(std::istream& in,
                                                                 const std::string& source = "<stream>");

// ledgers/<run_id>.csv, metrics.csv and summary.json under out_dir.
void write_simulation_outputs(const SimulationResult& result, const std::filesystem::path& out_dir);

}  // namespace cpbid::runner
