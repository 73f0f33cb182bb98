#include "cpbid/report.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cpbid/error.hpp"
#include "cpbid/metrics.hpp"

namespace cpbid::runner {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean = kNan;
  double std = kNan;
  std::size_t n = 0;
};

Moments moments(const std::vector<double>& xs) {
  std::vector<double> finite;
  for (double x : xs) {
    if (std::isfinite(x)) finite.push_back(x);
  }
  Moments m;
  m.n = finite.size();
  if (!finite.empty()) {
    m.mean = metrics::mean(finite);
    m.std = metrics::sample_std(finite);
  }
  return m;
}

nlohmann::ordered_json number(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json to_json(const Moments& m) {
  nlohmann::ordered_json j;
  j["mean"] = number(m.mean);
  j["std"] = number(m.std);
  j["n"] = m.n;
  return j;
}

double parse_cell(std::string_view cell, const std::string& source, std::size_t line) {
  if (cell == "nan") return kNan;
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(source + ":" + std::to_string(line) + ": not a number: '" + std::string(cell) + "'");
  }
  return v;
}

// Method order of first appearance keeps reports stable.
std::vector<std::string> method_order(std::span<const MetricsRow> rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  }
  return out;
}

// Ratio of mean scores over pairs that have both the method and True.
double ratio_of_means(std::span<const MetricsRow> rows, const std::string& method, std::int64_t period,
                      bool all_periods) {
  std::map<std::string, double> baseline;
  for (const auto& r : rows) {
    if (r.method == "True" && (all_periods || r.period == period)) baseline[pairing_key(r.run_id)] = r.score;
  }
  std::vector<double> alg;
  std::vector<double> base;
  for (const auto& r : rows) {
    if (r.method != method || (!all_periods && r.period != period)) continue;
    auto it = baseline.find(pairing_key(r.run_id));
    if (it == baseline.end()) continue;
    alg.push_back(r.score);
    base.push_back(it->second);
  }
  if (alg.empty() || metrics::mean(base) == 0.0) return kNan;
  return metrics::ratio(alg, base).ratio;
}

}  // namespace

std::string pairing_key(const std::string& run_id) {
  const auto pos = run_id.rfind('_');
  return pos == std::string::npos ? run_id : run_id.substr(0, pos);
}

std::vector<MetricsRow> compute_metrics(std::span<const RunLedger> ledgers, double zeta) {
  std::map<std::string, double> true_scores;
  std::vector<MetricsRow> rows;
  rows.reserve(ledgers.size());
  for (const auto& ledger : ledgers) {
    MetricsRow row;
    row.run_id = ledger.run_id;
    row.method = ledger.method;
    row.period = ledger.period;
    row.score = metrics::score(ledger, 1.0, zeta).score;
    row.wall_time_s = ledger.wall_time_s;
    const bool has_values = !ledger.rows.empty() && !std::isnan(ledger.rows.front().v_hat);
    if (has_values) {
      row.coverage = metrics::coverage(ledger);
      const auto ext = metrics::horizon_extremes(ledger);
      row.d_max = ext.d_max;
      row.v_min = ext.v_min;
    } else {
      row.coverage = row.d_max = kNan;
      row.v_min = ledger.rows.empty() ? kNan : metrics::horizon_extremes(ledger).v_min;
    }
    if (has_values && ledger.total_payment() > 0.0) {
      const auto ros = metrics::ros_summary(ledger);
      row.ros_true = ros.ros_true;
      row.ros_adjusted = ros.ros_adjusted;
      row.violation = ros.violation;
    } else if (ledger.total_payment() > 0.0) {
      double value = 0.0;
      for (const auto& r : ledger.rows) value += r.v_true * r.allocation;
      row.ros_true = value / ledger.total_payment();
      row.ros_adjusted = row.violation = kNan;
    } else {
      row.ros_true = row.ros_adjusted = row.violation = kNan;
    }
    if (ledger.method == "True") true_scores[pairing_key(ledger.run_id)] = row.score;
    rows.push_back(std::move(row));
  }
  for (auto& row : rows) {
    auto it = true_scores.find(pairing_key(row.run_id));
    row.ratio = (it != true_scores.end() && it->second != 0.0) ? row.score / it->second : kNan;
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.method << ',' << r.period << ',' << format_double(r.score) << ','
        << format_double(r.ratio) << ',' << format_double(r.coverage) << ',' << format_double(r.ros_true) << ','
        << format_double(r.ros_adjusted) << ',' << format_double(r.violation) << ',' << format_double(r.d_max)
        << ',' << format_double(r.v_min) << ',' << format_double(r.wall_time_s) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ParseError(source + ":1: expected metrics header '" + std::string(kMetricsHeader) + "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 12 columns");
    }
    MetricsRow r;
    r.run_id = cells[0];
    r.method = cells[1];
    r.period = static_cast<std::int64_t>(parse_cell(cells[2], source, line_no));
    double* fields[] = {&r.score,     &r.ratio, &r.coverage, &r.ros_true, &r.ros_adjusted,
                        &r.violation, &r.d_max, &r.v_min,    &r.wall_time_s};
    for (std::size_t k = 0; k < 9; ++k) *fields[k] = parse_cell(cells[3 + k], source, line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summarize(std::span<const MetricsRow> rows) {
  nlohmann::ordered_json out;
  nlohmann::ordered_json methods;
  for (const auto& method : method_order(rows)) {
    std::vector<double> score, ratio, coverage, ros_true, violation, wall;
    for (const auto& r : rows) {
      if (r.method != method) continue;
      score.push_back(r.score);
      ratio.push_back(r.ratio);
      coverage.push_back(r.coverage);
      ros_true.push_back(r.ros_true);
      violation.push_back(r.violation);
      wall.push_back(r.wall_time_s);
    }
    nlohmann::ordered_json m;
    m["n_runs"] = score.size();
    m["ratio_of_means"] = number(ratio_of_means(rows, method, 0, true));
    m["ratio"] = to_json(moments(ratio));
    m["score"] = to_json(moments(score));
    m["coverage"] = to_json(moments(coverage));
    m["ros_true"] = to_json(moments(ros_true));
    m["violation"] = to_json(moments(violation));
    m["wall_time_s"] = to_json(moments(wall));
    methods[method] = std::move(m);
  }
  out["methods"] = std::move(methods);

  std::vector<std::int64_t> periods;
  for (const auto& r : rows) {
    if (std::find(periods.begin(), periods.end(), r.period) == periods.end()) periods.push_back(r.period);
  }
  nlohmann::ordered_json per_period;
  for (auto p : periods) {
    nlohmann::ordered_json entry;
    for (const auto& method : method_order(rows)) {
      std::vector<double> ratio;
      for (const auto& r : rows) {
        if (r.method == method && r.period == p) ratio.push_back(r.ratio);
      }
      auto m = to_json(moments(ratio));
      m["ratio_of_means"] = number(ratio_of_means(rows, method, p, false));
      entry[method] = std::move(m);
    }
    per_period[std::to_string(p)] = std::move(entry);
  }
  out["per_period"] = std::move(per_period);
  return out.dump(2);
}

std::string format_summary_table(std::span<const MetricsRow> rows) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "method" << std::right << std::setw(7) << "runs" << std::setw(22)
      << "ratio (mean +- std)" << std::setw(12) << "ratio_mom" << std::setw(22) << "score (mean +- std)"
      << std::setw(10) << "coverage" << std::setw(24) << "wall_time_s (mean +- std)" << '\n';
  out << std::fixed;
  for (const auto& method : method_order(rows)) {
    std::vector<double> score, ratio, coverage, wall;
    for (const auto& r : rows) {
      if (r.method != method) continue;
      score.push_back(r.score);
      ratio.push_back(r.ratio);
      coverage.push_back(r.coverage);
      wall.push_back(r.wall_time_s);
    }
    const auto rm = moments(ratio);
    const auto sm = moments(score);
    const auto cm = moments(coverage);
    const auto wm = moments(wall);
    std::ostringstream ratio_cell, score_cell, wall_cell;
    ratio_cell << std::fixed << std::setprecision(4) << rm.mean << " +- " << rm.std;
    score_cell << std::fixed << std::setprecision(3) << sm.mean << " +- " << sm.std;
    wall_cell << std::scientific << std::setprecision(2) << wm.mean << " +- " << wm.std;
    out << std::left << std::setw(8) << method << std::right << std::setw(7) << score.size() << std::setw(22)
        << ratio_cell.str() << std::setw(12) << std::setprecision(4) << ratio_of_means(rows, method, 0, true)
        << std::setw(22) << score_cell.str() << std::setw(10) << std::setprecision(3) << cm.mean
        << std::setw(24) << wall_cell.str() << '\n';
  }
  return out.str();
}

}  // namespace cpbid::runner
