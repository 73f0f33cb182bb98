#pragma once

// One-sided split conformal calibration with weighted quantiles.
//
// Scores are the signed residual v - mu_hat (no absolute value), so the
// resulting interval is [0, mu_hat + d] where d is a weighted quantile of the
// calibration scores with an extra point mass at +infinity.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace cpbid::conformal {

using BinId = std::int64_t;

// Sentinel returned when the requested level is not attained on finite atoms.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Slack on cumulative-weight comparisons. Sums of k copies of 1/(m+1) drift by
// a few ulps, which would otherwise move the quantile by one atom.
inline constexpr double kLevelSlack = 1e-12;

// Tolerance on the total mass accepted by weighted_quantile.
inline constexpr double kNormalizationTolerance = 1e-9;

// v - mu_hat. Both inputs must lie in [0, 1]; anything else is corrupt data.
double nonconformity_score(double mu_hat, double v);

// Smallest score q with cumulative weight of {scores <= q} >= level, where the
// measure is sum_j weights[j] * delta(scores[j]) + infinity_mass * delta(+inf).
// Returns kInfinity when no finite atom reaches the level.
double weighted_quantile(std::span<const double> sorted_scores, std::span<const double> weights,
                         double infinity_mass, double level);

enum class CoverageMode {
  Marginal,  // beta = alpha, per-auction coverage
  Union,     // beta = alpha / horizon, simultaneous coverage over the horizon
};

struct MiscoverageConfig {
  double alpha = 0.1;
  CoverageMode mode = CoverageMode::Marginal;
  std::int64_t horizon = 1;

  // Effective miscoverage level. Throws ValidationError if it falls outside (0, 1).
  double beta() const;
};

struct CalibrationRow {
  BinId bin = 0;
  double mu_hat = 0.0;
  double v = 0.0;
};

// Per-bin sorted nonconformity scores. Immutable once built.
class CalibrationTable {
 public:
  static CalibrationTable fit(std::span<const CalibrationRow> rows);

  bool contains(BinId bin) const { return bins_.count(bin) != 0; }
  // Throws MissingCalibrationError for an unknown bin.
  std::span<const double> scores(BinId bin) const;
  // All scores across bins, sorted.
  std::span<const double> pooled() const { return pooled_; }
  const std::map<BinId, std::vector<double>>& bins() const { return bins_; }
  std::size_t total_count() const { return pooled_.size(); }

 private:
  std::map<BinId, std::vector<double>> bins_;
  std::vector<double> pooled_;
};

enum class UnknownBinPolicy {
  GlobalPool,  // use every calibration score
  Error,
};

// d for one bin: equal weights 1/(m+1) on the m scores of the bin and on +inf,
// evaluated at level 1 - beta.
double adjustment_term(const CalibrationTable& table, BinId bin, const MiscoverageConfig& config,
                       UnknownBinPolicy policy = UnknownBinPolicy::GlobalPool);

struct AdjustedValue {
  double mu_hat = 0.0;
  double d = 0.0;
  double v_hat = 0.0;  // clamp(mu_hat + d, 0, 1); upper end of [0, v_hat]
};

AdjustedValue adjusted_value(double mu_hat, double d);

// d precomputed for every calibrated bin at one beta.
class AdjustmentCache {
 public:
  AdjustmentCache(const CalibrationTable& table, const MiscoverageConfig& config,
                  UnknownBinPolicy policy = UnknownBinPolicy::GlobalPool);

  double operator()(BinId bin) const;
  double beta() const { return beta_; }
  const std::map<BinId, double>& per_bin() const { return per_bin_; }
  double pooled() const { return pooled_; }

 private:
  static constexpr BinId kDenseBinLimit = 1 << 16;
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  std::map<BinId, double> per_bin_;
  std::vector<double> dense_;  // per_bin_ by index, NaN where a bin is absent
  double pooled_ = kInfinity;
  double beta_ = 0.0;
  UnknownBinPolicy policy_;
};

}  // namespace cpbid::conformal
