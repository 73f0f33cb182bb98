#pragma once

#include <span>

#include "cpbid/ledger.hpp"

namespace cpbid::metrics {

inline constexpr double kDefaultZeta = 2.0;

// min{(tcpa / realized_cpa)^zeta, 1}: no penalty at or below target, decaying
// polynomially above it, 0 for an infinite CPA.
double penalty(double realized_cpa, double tcpa, double zeta = kDefaultZeta);

struct ScoreReport {
  double raw_conversions = 0.0;  // sum of CVR_true * allocation
  double spend = 0.0;
  double realized_cpa = 0.0;
  double penalty = 1.0;
  double score = 0.0;
};

// Conversions are counted in expectation. Ledger values are CVR_true in
// normalized units, so the target CPA is normally 1.
ScoreReport score(const RunLedger& ledger, double tcpa = 1.0, double zeta = kDefaultZeta);

struct RatioReport {
  double numerator_mean = 0.0;
  double denominator_mean = 0.0;
  double ratio = 0.0;
  double pair_ratio_std = 0.0;  // sample std of per-pair ratios (pairs with a zero baseline skipped)
};

RatioReport ratio(std::span<const double> alg_scores, std::span<const double> true_scores);

// Fraction of rounds with v_true <= v_hat.
double coverage(const RunLedger& ledger);

struct RosSummary {
  double ros_true = 0.0;
  double ros_adjusted = 0.0;
  double violation = 0.0;  // max(0, spend - sum v x (1 + d_max / v_min))
  double adjusted_violation = 0.0;  // max(0, spend - sum v_hat x)
  double d_max = 0.0;
  double v_min = 0.0;
};

// d_max and v_min range over the whole horizon. Throws UndefinedError on zero spend.
RosSummary ros_summary(const RunLedger& ledger);

struct HorizonExtremes {
  double d_max = 0.0;
  double v_min = 0.0;
};

HorizonExtremes horizon_extremes(const RunLedger& ledger);

double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);

}  // namespace cpbid::metrics
