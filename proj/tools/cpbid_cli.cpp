// cpbid: command-line front end for calibration, simulation, verification
// and reporting.
//
// Exit status: 0 on success, 1 on runtime failure (including failed
// verifier checks), 2 on usage errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpbid/config.hpp"
#include "cpbid/error.hpp"
#include "cpbid/ledger.hpp"
#include "cpbid/runner.hpp"

namespace fs = std::filesystem;
using namespace cpbid;

namespace {

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  int threads = -1;
};

runner::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  auto config = runner::load_config(path);
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (!o.methods.empty()) {
    config.methods.clear();
    for (const auto& m : o.methods) config.methods.push_back(runner::parse_method(m));
  }
  if (o.threads >= 0) config.threads = o.threads;
  runner::validate(config);
  return config;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void print_warnings(const runner::Experiment& ex) {
  for (const auto& w : ex.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_generate(const std::string& config_path, const fs::path& out_dir) {
  const auto config = runner::load_config(config_path);
  if (config.dataset.kind != runner::DatasetSource::Kind::Synthetic) {
    throw ConfigError("generate needs a synthetic dataset source");
  }
  const auto records = runner::load_dataset(config);
  {
    auto out = open_output(out_dir / "auction_log.csv");
    data::write_auction_log(out, records);
  }
  auto out = open_output(out_dir / "campaigns.csv");
  data::write_campaigns(out, config.campaigns);
  std::cout << "wrote " << records.size() << " auctions to " << (out_dir / "auction_log.csv").string() << '\n';
  return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& rows_path, double alpha,
                  const std::string& mode, std::int64_t horizon, const fs::path& out_dir) {
  if (!config_path.empty()) {
    const auto ex = runner::prepare_experiment(runner::load_config(config_path));
    print_warnings(ex);
    {
      auto out = open_output(out_dir / "calibration_rows.csv");
      runner::write_calibration_rows_csv(out, ex.calibration.rows);
    }
    auto out = open_output(out_dir / "adjustments.csv");
    runner::write_adjustments_csv(out, ex.calibration.adjustments);
    std::cout << "calibrated " << ex.calibration.table.total_count() << " scores in "
              << ex.calibration.table.bins().size() << " bins (beta = " << ex.calibration.adjustments.beta()
              << ")\n";
    return 0;
  }
  std::ifstream in(rows_path);
  if (!in) throw ValidationError("cannot open " + rows_path);
  const auto rows = runner::read_calibration_rows_csv(in, rows_path);
  const auto table = conformal::CalibrationTable::fit(rows);
  conformal::MiscoverageConfig cfg{alpha,
                                   mode == "union" ? conformal::CoverageMode::Union : conformal::CoverageMode::Marginal,
                                   horizon};
  const conformal::AdjustmentCache cache(table, cfg);
  auto out = open_output(out_dir / "adjustments.csv");
  runner::write_adjustments_csv(out, cache);
  std::cout << "calibrated " << table.total_count() << " scores in " << table.bins().size() << " bins (beta = "
            << cache.beta() << ")\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const Overrides& o, const fs::path& out_dir) {
  const auto ex = runner::prepare_experiment(load_with_overrides(config_path, o));
  print_warnings(ex);
  const auto result = runner::run_experiment(ex);
  runner::write_simulation_outputs(result, out_dir);
  std::cout << runner::format_summary_table(result.metrics);
  std::cout << "wrote " << result.ledgers.size() << " ledgers and metrics to " << out_dir.string() << '\n';
  return 0;
}

int cmd_verify(const std::string& config_path, const Overrides& o, const fs::path& out_dir) {
  const auto ex = runner::prepare_experiment(load_with_overrides(config_path, o));
  print_warnings(ex);
  const auto records = runner::run_verification(ex);
  {
    auto out = open_output(out_dir / "verify.json");
    out << oracle::records_to_json(records) << '\n';
  }
  std::size_t held = 0, skipped = 0, failed = 0;
  for (const auto& r : records) {
    if (!r.skipped_reason.empty()) {
      ++skipped;
    } else if (r.holds) {
      ++held;
    } else {
      ++failed;
      std::cerr << "check failed: " << r.check << " on " << r.instance_id << " (lhs " << r.lhs << ", rhs "
                << r.rhs << ")\n";
    }
  }
  std::cout << records.size() << " checks: " << held << " hold, " << skipped << " skipped, " << failed
            << " failed\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(const fs::path& in_dir) {
  const auto path = in_dir / "metrics.csv";
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  const auto rows = runner::read_metrics_csv(in, path.string());
  {
    auto out = open_output(in_dir / "summary.json");
    out << runner::summarize(rows) << '\n';
  }
  std::cout << runner::format_summary_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal value adjustment and dual mirror descent auto-bidding simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  Overrides overrides;

  auto* generate = app.add_subcommand("generate", "Write a synthetic auction log and campaign file");
  generate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  generate->add_option("--out", out_dir, "Output directory");

  std::string rows_path;
  double alpha = 0.1;
  std::string mode = "marginal";
  std::int64_t horizon = 1;
  auto* calibrate = app.add_subcommand("calibrate", "Export per-bin adjustment terms");
  auto* cal_config = calibrate->add_option("--config", config_path, "Experiment config (JSON)");
  auto* cal_rows = calibrate->add_option("--rows", rows_path, "Calibration rows CSV (bin_id,mu_hat,v)");
  cal_config->excludes(cal_rows);
  calibrate->add_option("--alpha", alpha, "Miscoverage level for --rows")->check(CLI::Range(0.0, 1.0));
  calibrate->add_option("--mode", mode, "marginal or union (with --rows)")
      ->check(CLI::IsMember({"marginal", "union"}));
  calibrate->add_option("--horizon", horizon, "Horizon for union mode (with --rows)")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", out_dir, "Output directory");

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seeds", overrides.seeds, "Override seeds")->delimiter(',');
    sub->add_option("--methods", overrides.methods, "Override methods (Adjust,Pred,True,UCB)")->delimiter(',');
    sub->add_option("--threads", overrides.threads, "Worker threads (0: OpenMP default)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "Run all methods and write ledgers and metrics");
  add_run_flags(simulate);
  auto* verify = app.add_subcommand("verify", "Check small instances against brute-force oracles");
  add_run_flags(verify);

  std::string in_dir;
  auto* report = app.add_subcommand("report", "Aggregate a metrics CSV into per-method summaries");
  report->add_option("--in", in_dir, "Directory holding metrics.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return cmd_generate(config_path, out_dir);
    if (*calibrate) {
      if (config_path.empty() && rows_path.empty()) {
        std::cerr << "calibrate: one of --config or --rows is required\n";
        return 2;
      }
      return cmd_calibrate(config_path, rows_path, alpha, mode, horizon, out_dir);
    }
    if (*simulate) return cmd_simulate(config_path, overrides, out_dir);
    if (*verify) return cmd_verify(config_path, overrides, out_dir);
    if (*report) return cmd_report(in_dir);
  } catch (const cpbid::Error& e) {
    std::cerr << "error [" << e.category() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
