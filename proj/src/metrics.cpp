#include "cpbid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cpbid/error.hpp"

namespace cpbid::metrics {

double penalty(double realized_cpa, double tcpa, double zeta) {
  if (!(tcpa > 0.0)) throw ValidationError("tcpa must be positive");
  if (realized_cpa <= tcpa) return 1.0;
  if (std::isinf(realized_cpa)) return 0.0;
  return std::min(std::pow(tcpa / realized_cpa, zeta), 1.0);
}

ScoreReport score(const RunLedger& ledger, double tcpa, double zeta) {
  ScoreReport out;
  for (const auto& r : ledger.rows) {
    out.raw_conversions += r.v_true * r.allocation;
    out.spend += r.payment;
  }
  if (out.raw_conversions > 0.0) {
    out.realized_cpa = out.spend / out.raw_conversions;
  } else {
    out.realized_cpa = out.spend > 0.0 ? std::numeric_limits<double>::infinity() : tcpa;
  }
  out.penalty = penalty(out.realized_cpa, tcpa, zeta);
  out.score = out.penalty * out.raw_conversions;
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

RatioReport ratio(std::span<const double> alg_scores, std::span<const double> true_scores) {
  if (alg_scores.empty() || alg_scores.size() != true_scores.size()) {
    throw ValidationError("ratio needs two non-empty score lists of equal length");
  }
  RatioReport out;
  out.numerator_mean = mean(alg_scores);
  out.denominator_mean = mean(true_scores);
  if (out.denominator_mean == 0.0) throw UndefinedError("ratio undefined: baseline mean score is 0");
  out.ratio = out.numerator_mean / out.denominator_mean;
  std::vector<double> pairs;
  for (std::size_t i = 0; i < alg_scores.size(); ++i) {
    if (true_scores[i] != 0.0) pairs.push_back(alg_scores[i] / true_scores[i]);
  }
  out.pair_ratio_std = sample_std(pairs);
  return out;
}

double coverage(const RunLedger& ledger) {
  if (ledger.rows.empty()) throw ValidationError("coverage of an empty ledger");
  std::size_t covered = 0;
  for (const auto& r : ledger.rows) covered += r.v_true <= r.v_hat ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(ledger.rows.size());
}

HorizonExtremes horizon_extremes(const RunLedger& ledger) {
  HorizonExtremes out;
  out.v_min = std::numeric_limits<double>::infinity();
  for (const auto& r : ledger.rows) {
    out.d_max = std::max(out.d_max, std::abs(r.v_hat - r.v_true));
    out.v_min = std::min(out.v_min, r.v_true);
  }
  if (ledger.rows.empty()) out.v_min = 0.0;
  return out;
}

RosSummary ros_summary(const RunLedger& ledger) {
  double spend = 0.0;
  double value = 0.0;
  double adjusted = 0.0;
  for (const auto& r : ledger.rows) {
    spend += r.payment;
    value += r.v_true * r.allocation;
    adjusted += r.v_hat * r.allocation;
  }
  if (!(spend > 0.0)) throw UndefinedError("return on spend undefined with zero spend");
  const auto ext = horizon_extremes(ledger);
  RosSummary out;
  out.ros_true = value / spend;
  out.ros_adjusted = adjusted / spend;
  out.d_max = ext.d_max;
  out.v_min = ext.v_min;
  if (ext.v_min > 0.0) {
    out.violation = std::max(0.0, spend - value * (1.0 + ext.d_max / ext.v_min));
  } else {
    // Infinite widening factor: only a run with no acquired value violates.
    out.violation = value > 0.0 ? 0.0 : spend;
  }
  out.adjusted_violation = std::max(0.0, spend - adjusted);
  return out;
}

}  // namespace cpbid::metrics
