#include "cpbid/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "cpbid/error.hpp"

namespace cpbid::conformal {

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

double equal_weight_quantile(std::span<const double> sorted_scores, double level) {
  const double w = 1.0 / static_cast<double>(sorted_scores.size() + 1);
  const std::vector<double> weights(sorted_scores.size(), w);
  return weighted_quantile(sorted_scores, weights, w, level);
}

}  // namespace

double nonconformity_score(double mu_hat, double v) {
  if (!in_unit_interval(mu_hat) || !in_unit_interval(v)) {
    std::ostringstream msg;
    msg << "nonconformity score inputs must lie in [0,1] (mu_hat=" << mu_hat << ", v=" << v << ")";
    throw ValidationError(msg.str());
  }
  return v - mu_hat;
}

double weighted_quantile(std::span<const double> sorted_scores, std::span<const double> weights,
                         double infinity_mass, double level) {
  if (sorted_scores.size() != weights.size()) {
    throw ValidationError("weighted_quantile: scores and weights differ in length");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("weighted_quantile: level must lie in (0,1)");
  }
  if (infinity_mass < 0.0) {
    throw ValidationError("weighted_quantile: negative infinity mass");
  }
  if (sorted_scores.empty() && infinity_mass == 0.0) {
    throw ValidationError("weighted_quantile: empty measure");
  }
  double total = infinity_mass;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("weighted_quantile: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    std::ostringstream msg;
    msg << "weighted_quantile: weights total " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
  if (!std::is_sorted(sorted_scores.begin(), sorted_scores.end())) {
    throw ValidationError("weighted_quantile: scores must be sorted ascending");
  }

  double cumulative = 0.0;
  for (std::size_t j = 0; j < sorted_scores.size(); ++j) {
    cumulative += weights[j];
    if (cumulative >= level - kLevelSlack) return sorted_scores[j];
  }
  return kInfinity;
}

double MiscoverageConfig::beta() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
  if (mode == CoverageMode::Marginal) return alpha;
  if (horizon < 1) throw ValidationError("union coverage needs a positive horizon");
  return alpha / static_cast<double>(horizon);
}

CalibrationTable CalibrationTable::fit(std::span<const CalibrationRow> rows) {
  if (rows.empty()) throw ValidationError("calibration set is empty");
  CalibrationTable table;
  table.pooled_.reserve(rows.size());
  for (const auto& row : rows) {
    const double s = nonconformity_score(row.mu_hat, row.v);
    table.bins_[row.bin].push_back(s);
    table.pooled_.push_back(s);
  }
  for (auto& [bin, scores] : table.bins_) std::sort(scores.begin(), scores.end());
  std::sort(table.pooled_.begin(), table.pooled_.end());
  return table;
}

std::span<const double> CalibrationTable::scores(BinId bin) const {
  auto it = bins_.find(bin);
  if (it == bins_.end()) {
    throw MissingCalibrationError("no calibration scores for bin " + std::to_string(bin));
  }
  return it->second;
}

double adjustment_term(const CalibrationTable& table, BinId bin, const MiscoverageConfig& config,
                       UnknownBinPolicy policy) {
  const double level = 1.0 - config.beta();
  if (table.contains(bin)) return equal_weight_quantile(table.scores(bin), level);
  if (policy == UnknownBinPolicy::Error) {
    throw MissingCalibrationError("no calibration scores for bin " + std::to_string(bin));
  }
  return equal_weight_quantile(table.pooled(), level);
}

AdjustedValue adjusted_value(double mu_hat, double d) {
  AdjustedValue out{mu_hat, d, 1.0};
  if (!std::isinf(d) || d < 0.0) out.v_hat = std::clamp(mu_hat + d, 0.0, 1.0);
  return out;
}

AdjustmentCache::AdjustmentCache(const CalibrationTable& table, const MiscoverageConfig& config,
                                 UnknownBinPolicy policy)
    : beta_(config.beta()), policy_(policy) {
  for (const auto& [bin, scores] : table.bins()) {
    per_bin_[bin] = adjustment_term(table, bin, config, policy);
  }
  pooled_ = equal_weight_quantile(table.pooled(), 1.0 - beta_);
  // Field-calibration bins are small nonnegative ids; index them directly.
  if (!per_bin_.empty() && per_bin_.begin()->first >= 0 && per_bin_.rbegin()->first < kDenseBinLimit) {
    dense_.assign(static_cast<std::size_t>(per_bin_.rbegin()->first) + 1, kMissing);
    for (const auto& [bin, d] : per_bin_) dense_[static_cast<std::size_t>(bin)] = d;
  }
}

double AdjustmentCache::operator()(BinId bin) const {
  if (bin >= 0 && static_cast<std::size_t>(bin) < dense_.size()) {
    const double d = dense_[static_cast<std::size_t>(bin)];
    if (d == d) return d;
  }
  auto it = per_bin_.find(bin);
  if (it != per_bin_.end()) return it->second;
  if (policy_ == UnknownBinPolicy::Error) {
    throw MissingCalibrationError("no calibration scores for bin " + std::to_string(bin));
  }
  return pooled_;
}

}  // namespace cpbid::conformal
