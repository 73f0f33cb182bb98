#pragma once

// Auction-log ingestion, pCVR field binning, post-hoc true CVR, synthetic
// generation and Bernoulli event sampling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cpbid/rng.hpp"

namespace cpbid::data {

using BinId = std::int64_t;

struct AuctionRecord {
  std::int64_t period = 0;
  std::int64_t auction_id = 0;
  double pcvr = 0.0;
  double sigma = 0.0;  // CVR noise scale
  double pctr = 0.0;
  std::vector<double> competing_bids;
  BinId bin_id = -1;  // set from a BinScheme
  // Mean of the CVR draw. Synthetic data knows it (and it may differ from a
  // biased pcvr); logs loaded from disk leave it NaN and the draw centers on pcvr.
  double cvr_mean = std::numeric_limits<double>::quiet_NaN();

  double cvr_center() const { return cvr_mean == cvr_mean ? cvr_mean : pcvr; }
};

inline constexpr const char* kAuctionLogHeader = "period,auction_id,pcvr,sigma,pctr,competing_bids";
inline constexpr const char* kCampaignHeader = "campaign_id,budget,tcpa";

// Rows in file order. Throws ParseError (with line number) on malformed rows
// and ValidationError naming the column on out-of-range fields.
std::vector<AuctionRecord> read_auction_log(std::istream& in, const std::string& source = "<stream>");
std::vector<AuctionRecord> load_auction_log(const std::filesystem::path& path);
void write_auction_log(std::ostream& out, std::span<const AuctionRecord> records);

struct CampaignConfig {
  std::int64_t campaign_id = 0;
  double budget = 0.0;
  double tcpa = 1.0;
};

std::vector<CampaignConfig> read_campaigns(std::istream& in, const std::string& source = "<stream>");
std::vector<CampaignConfig> load_campaigns(const std::filesystem::path& path);
void write_campaigns(std::ostream& out, std::span<const CampaignConfig> campaigns);

// Equal-size rank bins over training pCVRs. Bin b holds sorted ranks
// [floor(b*m/n), floor((b+1)*m/n)); a value equal to a cut point belongs to
// the lower bin, values outside the training range go to the end bins.
class BinScheme {
 public:
  static BinScheme build(std::span<const double> training_pcvrs, int n_bins = 100);

  BinId assign(double pcvr) const;
  int n_bins() const { return n_bins_; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  // True when tied training values collapsed some bins.
  bool degenerate() const { return degenerate_; }

  bool has_true_cvr() const { return !bin_true_cvr_.empty(); }
  // Post-hoc true CVR of a bin; bins without training records use the global mean.
  double true_cvr(BinId bin) const;
  const std::vector<double>& bin_true_cvr() const { return bin_true_cvr_; }
  std::size_t empty_bins() const { return empty_bins_; }

  void set_true_cvr(std::vector<double> per_bin, double global_mean, std::size_t empty_bins);

 private:
  int n_bins_ = 0;
  std::vector<double> boundaries_;
  bool degenerate_ = false;
  std::vector<double> bin_true_cvr_;
  double global_true_cvr_ = 0.0;
  std::size_t empty_bins_ = 0;
};

// Draws CVR ~ N(center, sigma^2) clamped to [0,1] for every record and stores
// per-bin averages as the post-hoc true CVR.
BinScheme posthoc_true_cvr(std::span<const AuctionRecord> records, const BinScheme& scheme,
                           RngStream& rng);

struct GeneratorSettings {
  int n_types = 5;  // distinct distributions; period p uses type p % n_types
  int n_periods = 7;
  int auctions_per_period = 2000;
  double mu_low = 0.02;  // true mean CVR range
  double mu_high = 0.5;
  double bias = 0.0;   // pcvr = clamp(mu - bias)
  double sigma = 0.0;  // CVR noise scale reported with every record
  int n_competitors = 3;
  double competing_median = 0.15;  // log-normal competing bids
  double competing_log_sd = 0.5;
  double competing_cap = 1.0;  // bids are capped here; also the largest possible payment
  double pctr_low = 0.01;
  double pctr_high = 0.1;
};

void validate(const GeneratorSettings& settings);

// Deterministic given the seed.
std::vector<AuctionRecord> generate_synthetic(const GeneratorSettings& settings, std::uint64_t seed);

bool sample_event(double probability, RngStream& rng);

}  // namespace cpbid::data
