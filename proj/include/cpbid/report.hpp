#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cpbid/ledger.hpp"

namespace cpbid::runner {

inline constexpr const char* kMetricsHeader =
    "run_id,method,period,score,ratio,coverage,ros_true,ros_adjusted,violation,d_max,v_min,wall_time_s";

// One metrics line per ledger. Quantities that do not apply (coverage of the
// UCB baseline, RoS of a run that never paid) are NaN and print as "nan".
struct MetricsRow {
  std::string run_id;
  std::string method;
  std::int64_t period = 0;
  double score = 0.0;
  double ratio = 0.0;
  double coverage = 0.0;
  double ros_true = 0.0;
  double ros_adjusted = 0.0;
  double violation = 0.0;
  double d_max = 0.0;
  double v_min = 0.0;
  double wall_time_s = 0.0;
};

// Ratio uses the True ledger with the same campaign, period and seed.
std::vector<MetricsRow> compute_metrics(std::span<const RunLedger> ledgers, double zeta);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in, const std::string& source = "<stream>");

// run_id without its trailing method tag; rows sharing it are paired.
std::string pairing_key(const std::string& run_id);

// Per-method mean and std of every metric, the ratio of mean scores against
// True, and a per-period breakdown of the ratio. Pretty-printed JSON.
std::string summarize(std::span<const MetricsRow> rows);

// Plain-text table of the summary for terminals.
std::string format_summary_table(std::span<const MetricsRow> rows);

}  // namespace cpbid::runner
