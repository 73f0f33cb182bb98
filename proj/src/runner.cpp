#include "cpbid/runner.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cpbid/error.hpp"

namespace cpbid::runner {

namespace {

bool contains(const std::vector<std::int64_t>& xs, std::int64_t x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

// Win/lose instance for a verified sub-run. Rounds that cannot produce an
// allocation (eCPM without a click, unbiddable rounds) contribute neither
// value nor cost.
oracle::OfflineInstance verification_instance(const RunLedger& ledger, const ExperimentConfig& config) {
  auto inst = oracle::instance_from_ledger(ledger);
  for (std::size_t t = 0; t < ledger.rows.size(); ++t) {
    const auto& row = ledger.rows[t];
    const bool inert = (config.mechanism == MechanismKind::Ecpm && !row.click) || !std::isfinite(row.price_threshold);
    if (inert) {
      inst.true_values[t] = 0.0;
      inst.adjusted_values[t] = 0.0;
      inst.costs[t] = 0.0;
    }
  }
  return inst;
}

std::vector<oracle::CheckRecord> verify_one(const RunInput& full, const Experiment& experiment) {
  const auto& config = experiment.config;
  RunInput sub = full;
  const auto h = std::min<std::size_t>(static_cast<std::size_t>(config.verify.horizon), full.rounds.size());
  sub.rounds.resize(h);
  sub.budget = full.budget * static_cast<double>(h) / static_cast<double>(full.rounds.size());

  ExperimentConfig quiet = config;
  quiet.record_wall_time = false;
  const auto ledger = simulate_run(sub, Method::Adjust, experiment.calibration, quiet);
  const auto inst = verification_instance(ledger, config);
  const auto& id = ledger.run_id;

  std::vector<oracle::CheckRecord> out;
  const auto prop1 = oracle::verify_prop1(inst, inst.adjusted_values);
  out.push_back(oracle::to_record(prop1, id));

  const auto opt_true = oracle::offline_optimum(inst, oracle::ValueField::True);
  const auto opt_adj = oracle::offline_optimum(inst, oracle::ValueField::Adjusted);
  const auto t2 = oracle::check_theorem2_realization(ledger, opt_true, opt_adj);
  for (auto& r : oracle::to_records(t2, id)) out.push_back(std::move(r));

  if (ledger.total_payment() > 0.0) {
    for (auto& r : oracle::to_records(oracle::check_theorem3(ledger), id)) out.push_back(std::move(r));
  } else {
    out.push_back({"theorem3_lower", id, false, 0.0, 0.0, "zero spend: RoS undefined"});
    out.push_back({"theorem3_upper", id, false, 0.0, 0.0, "zero spend: RoS undefined"});
  }
  return out;
}

}  // namespace

std::vector<data::AuctionRecord> load_dataset(const ExperimentConfig& config) {
  if (config.dataset.kind == DatasetSource::Kind::File) return data::load_auction_log(config.dataset.auction_log);
  return data::generate_synthetic(config.dataset.generator, config.dataset.generator_seed);
}

Experiment prepare_experiment(const ExperimentConfig& config) {
  validate(config);
  auto records = load_dataset(config);

  std::vector<data::CampaignConfig> campaigns = config.campaigns;
  if (campaigns.empty() && !config.dataset.campaigns_file.empty()) {
    campaigns = data::load_campaigns(config.dataset.campaigns_file);
  }
  if (campaigns.empty()) throw ConfigError("no campaigns configured");

  std::vector<data::AuctionRecord> calibration_records;
  std::map<std::int64_t, std::vector<data::AuctionRecord>> test;
  for (auto p : config.test_periods) test[p];
  for (auto& r : records) {
    if (contains(config.calibration_periods, r.period)) {
      calibration_records.push_back(std::move(r));
    } else if (auto it = test.find(r.period); it != test.end()) {
      it->second.push_back(std::move(r));
    }
  }
  for (const auto& [p, recs] : test) {
    if (recs.empty()) throw ConfigError("test period " + std::to_string(p) + " has no auctions");
  }

  Experiment ex{config, std::move(campaigns), std::move(test), calibrate(calibration_records, config), {}};
  const auto& scheme = ex.calibration.scheme;
  if (scheme.degenerate()) ex.warnings.push_back("bin scheme is degenerate: tied pCVRs collapsed some bins");
  if (scheme.empty_bins() > 0) {
    ex.warnings.push_back(std::to_string(scheme.empty_bins()) +
                          " bins hold no calibration records; they use the global mean CVR");
  }
  return ex;
}

std::vector<RunInput> build_run_inputs(const Experiment& ex) {
  std::vector<RunInput> inputs;
  for (const auto& campaign : ex.campaigns) {
    for (auto period : ex.config.test_periods) {
      for (auto seed : ex.config.seeds) {
        inputs.push_back(
            build_run_input(ex.test_periods.at(period), ex.calibration, campaign, ex.config, period, seed));
      }
    }
  }
  return inputs;
}

SimulationResult run_experiment(const Experiment& ex, Execution execution) {
  const auto inputs = build_run_inputs(ex);
  std::vector<RunTask> tasks;
  tasks.reserve(inputs.size() * ex.config.methods.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (auto m : ex.config.methods) tasks.push_back({i, m});
  }
  SimulationResult result;
  result.ledgers = execution == Execution::Parallel ? execute_runs(inputs, tasks, ex.calibration, ex.config)
                                                    : execute_runs_serial(inputs, tasks, ex.calibration, ex.config);
  result.metrics = compute_metrics(result.ledgers, ex.config.zeta);
  return result;
}

std::vector<oracle::CheckRecord> run_verification(const Experiment& ex) {
  const auto inputs = build_run_inputs(ex);
  std::vector<std::vector<oracle::CheckRecord>> per_input(inputs.size());
  std::exception_ptr failure;
  const int threads = ex.config.threads > 0 ? ex.config.threads : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(inputs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      per_input[static_cast<std::size_t>(i)] = verify_one(inputs[static_cast<std::size_t>(i)], ex);
    } catch (...) {
#pragma omp critical(cpbid_verify_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<oracle::CheckRecord> out;
  for (auto& v : per_input) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

void write_adjustments_csv(std::ostream& out, const conformal::AdjustmentCache& cache) {
  out << kAdjustmentsHeader << '\n';
  for (const auto& [bin, d] : cache.per_bin()) {
    out << bin << ',' << format_double(cache.beta()) << ',' << format_double(d) << '\n';
  }
}

void write_calibration_rows_csv(std::ostream& out, std::span<const conformal::CalibrationRow> rows) {
  out << kCalibrationRowsHeader << '\n';
  for (const auto& r : rows) out << r.bin << ',' << format_double(r.mu_hat) << ',' << format_double(r.v) << '\n';
}

std::vector<conformal::CalibrationRow> read_calibration_rows_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, line.find_last_not_of("\r") + 1) != kCalibrationRowsHeader) {
    throw ParseError(source + ":1: header must be '" + std::string(kCalibrationRowsHeader) + "'");
  }
  std::vector<conformal::CalibrationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string bin, mu, v;
    if (!std::getline(ss, bin, ',') || !std::getline(ss, mu, ',') || !std::getline(ss, v) ||
        v.find(',') != std::string::npos) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 3 columns");
    }
    conformal::CalibrationRow row;
    auto parse = [&](const std::string& cell, auto& out, const char* column) {
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": column '" + column + "' is malformed");
      }
    };
    parse(bin, row.bin, "bin_id");
    parse(mu, row.mu_hat, "mu_hat");
    parse(v, row.v, "v");
    rows.push_back(row);
  }
  return rows;
}

void write_simulation_outputs(const SimulationResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "ledgers");
  for (const auto& ledger : result.ledgers) {
    auto out = open_output(out_dir / "ledgers" / (ledger.run_id + ".csv"));
    write_ledger_csv(out, ledger);
  }
  {
    auto out = open_output(out_dir / "metrics.csv");
    write_metrics_csv(out, result.metrics);
  }
  auto out = open_output(out_dir / "summary.json");
  out << summarize(result.metrics) << '\n';
}

}  // namespace cpbid::runner
