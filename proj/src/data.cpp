#include "cpbid/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "cpbid/error.hpp"
#include "cpbid/ledger.hpp"

namespace cpbid::data {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

double parse_double(std::string_view cell, const char* column, const std::string& source,
                    std::size_t line) {
  cell = trim(cell);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(where(source, line) + ": column '" + column + "' is not a number: '" +
                     std::string(cell) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view cell, const char* column, const std::string& source,
                       std::size_t line) {
  cell = trim(cell);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(where(source, line) + ": column '" + column + "' is not an integer: '" +
                     std::string(cell) + "'");
  }
  return value;
}

void require_range(double value, double lo, double hi, const char* column, const std::string& source,
                   std::size_t line) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream msg;
    msg << where(source, line) << ": column '" << column << "' out of range [" << lo << ", " << hi
        << "]: " << value;
    throw ValidationError(msg.str());
  }
}

void require_header(std::istream& in, const char* expected, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(where(source, 1) + ": missing header");
  if (trim(header) != expected) {
    throw ParseError(where(source, 1) + ": header must be '" + expected + "', got '" + header + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

double sample_beta(double a, double b, RngStream& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

std::vector<AuctionRecord> read_auction_log(std::istream& in, const std::string& source) {
  require_header(in, kAuctionLogHeader, source);
  std::vector<AuctionRecord> records;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 6) {
      throw ParseError(where(source, line_no) + ": expected 6 columns, got " +
                       std::to_string(cells.size()));
    }
    AuctionRecord r;
    r.period = parse_int(cells[0], "period", source, line_no);
    r.auction_id = parse_int(cells[1], "auction_id", source, line_no);
    r.pcvr = parse_double(cells[2], "pcvr", source, line_no);
    r.sigma = parse_double(cells[3], "sigma", source, line_no);
    r.pctr = parse_double(cells[4], "pctr", source, line_no);
    if (trim(cells[5]).empty()) {
      throw ParseError(where(source, line_no) + ": column 'competing_bids' is empty");
    }
    for (auto cell : split(trim(cells[5]), ';')) {
      const double bid = parse_double(cell, "competing_bids", source, line_no);
      require_range(bid, 0.0, std::numeric_limits<double>::max(), "competing_bids", source, line_no);
      r.competing_bids.push_back(bid);
    }
    require_range(r.pcvr, 0.0, 1.0, "pcvr", source, line_no);
    require_range(r.sigma, 0.0, std::numeric_limits<double>::max(), "sigma", source, line_no);
    require_range(r.pctr, 0.0, 1.0, "pctr", source, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AuctionRecord> load_auction_log(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_auction_log(in, path.string());
}

void write_auction_log(std::ostream& out, std::span<const AuctionRecord> records) {
  out << kAuctionLogHeader << '\n';
  for (const auto& r : records) {
    out << r.period << ',' << r.auction_id << ',' << format_double(r.pcvr) << ','
        << format_double(r.sigma) << ',' << format_double(r.pctr) << ',';
    for (std::size_t j = 0; j < r.competing_bids.size(); ++j) {
      if (j) out << ';';
      out << format_double(r.competing_bids[j]);
    }
    out << '\n';
  }
}

std::vector<CampaignConfig> read_campaigns(std::istream& in, const std::string& source) {
  require_header(in, kCampaignHeader, source);
  std::vector<CampaignConfig> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 3) {
      throw ParseError(where(source, line_no) + ": expected 3 columns, got " +
                       std::to_string(cells.size()));
    }
    CampaignConfig c;
    c.campaign_id = parse_int(cells[0], "campaign_id", source, line_no);
    c.budget = parse_double(cells[1], "budget", source, line_no);
    c.tcpa = parse_double(cells[2], "tcpa", source, line_no);
    if (!(c.budget > 0.0)) throw ValidationError(where(source, line_no) + ": column 'budget' must be > 0");
    if (!(c.tcpa > 0.0)) throw ValidationError(where(source, line_no) + ": column 'tcpa' must be > 0");
    out.push_back(c);
  }
  return out;
}

std::vector<CampaignConfig> load_campaigns(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_campaigns(in, path.string());
}

void write_campaigns(std::ostream& out, std::span<const CampaignConfig> campaigns) {
  out << kCampaignHeader << '\n';
  for (const auto& c : campaigns) {
    out << c.campaign_id << ',' << format_double(c.budget) << ',' << format_double(c.tcpa) << '\n';
  }
}

BinScheme BinScheme::build(std::span<const double> training_pcvrs, int n_bins) {
  if (n_bins < 1) throw ValidationError("need at least one bin");
  const std::size_t m = training_pcvrs.size();
  if (m < static_cast<std::size_t>(n_bins)) {
    throw ValidationError("fewer training points (" + std::to_string(m) + ") than bins (" +
                          std::to_string(n_bins) + ")");
  }
  std::vector<double> sorted(training_pcvrs.begin(), training_pcvrs.end());
  std::sort(sorted.begin(), sorted.end());

  BinScheme s;
  s.n_bins_ = n_bins;
  s.boundaries_.reserve(static_cast<std::size_t>(n_bins - 1));
  for (int k = 1; k < n_bins; ++k) {
    const std::size_t rank = static_cast<std::size_t>(k) * m / static_cast<std::size_t>(n_bins);
    s.boundaries_.push_back(sorted[rank - 1]);
  }
  s.degenerate_ = std::adjacent_find(s.boundaries_.begin(), s.boundaries_.end()) != s.boundaries_.end();
  return s;
}

BinId BinScheme::assign(double pcvr) const {
  return static_cast<BinId>(std::lower_bound(boundaries_.begin(), boundaries_.end(), pcvr) -
                            boundaries_.begin());
}

double BinScheme::true_cvr(BinId bin) const {
  if (bin_true_cvr_.empty()) throw InvariantError("bin scheme has no post-hoc true CVR");
  if (bin < 0 || bin >= static_cast<BinId>(bin_true_cvr_.size())) return global_true_cvr_;
  const double v = bin_true_cvr_[static_cast<std::size_t>(bin)];
  return std::isnan(v) ? global_true_cvr_ : v;
}

void BinScheme::set_true_cvr(std::vector<double> per_bin, double global_mean, std::size_t empty_bins) {
  bin_true_cvr_ = std::move(per_bin);
  global_true_cvr_ = global_mean;
  empty_bins_ = empty_bins;
}

BinScheme posthoc_true_cvr(std::span<const AuctionRecord> records, const BinScheme& scheme,
                           RngStream& rng) {
  if (records.empty()) throw ValidationError("post-hoc CVR needs at least one record");
  const auto n = static_cast<std::size_t>(scheme.n_bins());
  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  double total = 0.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& r : records) {
    double cvr = r.cvr_center();
    if (r.sigma > 0.0) cvr = std::clamp(cvr + r.sigma * normal(rng), 0.0, 1.0);
    const auto bin = static_cast<std::size_t>(scheme.assign(r.pcvr));
    sums[bin] += cvr;
    ++counts[bin];
    total += cvr;
  }
  std::vector<double> per_bin(n, std::numeric_limits<double>::quiet_NaN());
  std::size_t empty = 0;
  for (std::size_t b = 0; b < n; ++b) {
    if (counts[b] == 0) {
      ++empty;
      continue;
    }
    per_bin[b] = sums[b] / static_cast<double>(counts[b]);
  }
  BinScheme out = scheme;
  out.set_true_cvr(std::move(per_bin), total / static_cast<double>(records.size()), empty);
  return out;
}

void validate(const GeneratorSettings& s) {
  auto fail = [](const std::string& what) { throw ConfigError("generator: " + what); };
  if (s.n_types < 1) fail("n_types must be >= 1");
  if (s.n_periods < 1) fail("n_periods must be >= 1");
  if (s.auctions_per_period < 1) fail("auctions_per_period must be >= 1");
  if (!(s.mu_low >= 0.0 && s.mu_low <= s.mu_high && s.mu_high <= 1.0)) fail("need 0 <= mu_low <= mu_high <= 1");
  if (s.sigma < 0.0) fail("sigma must be >= 0");
  if (s.n_competitors < 1) fail("n_competitors must be >= 1");
  if (!(s.competing_median > 0.0)) fail("competing_median must be > 0");
  if (s.competing_log_sd < 0.0) fail("competing_log_sd must be >= 0");
  if (!(s.competing_cap > 0.0)) fail("competing_cap must be > 0");
  if (!(s.pctr_low > 0.0 && s.pctr_low <= s.pctr_high && s.pctr_high <= 1.0)) {
    fail("need 0 < pctr_low <= pctr_high <= 1");
  }
}

std::vector<AuctionRecord> generate_synthetic(const GeneratorSettings& s, std::uint64_t seed) {
  validate(s);
  auto rng = make_stream(seed, StreamPurpose::Generate);
  std::vector<AuctionRecord> out;
  out.reserve(static_cast<std::size_t>(s.n_periods) * static_cast<std::size_t>(s.auctions_per_period));
  std::lognormal_distribution<double> competing(std::log(s.competing_median), s.competing_log_sd);
  std::int64_t next_id = 0;
  for (int p = 0; p < s.n_periods; ++p) {
    // Type k draws its mean CVR from Beta(1 + k, n_types - k) over [mu_low, mu_high].
    const int type = p % s.n_types;
    const double a = 1.0 + type;
    const double b = static_cast<double>(s.n_types - type);
    for (int i = 0; i < s.auctions_per_period; ++i) {
      AuctionRecord r;
      r.period = p;
      r.auction_id = next_id++;
      r.cvr_mean = s.mu_low + (s.mu_high - s.mu_low) * sample_beta(a, b, rng);
      r.pcvr = std::clamp(r.cvr_mean - s.bias, 0.0, 1.0);
      r.sigma = s.sigma;
      r.pctr = s.pctr_low + (s.pctr_high - s.pctr_low) * uniform01(rng);
      r.competing_bids.resize(static_cast<std::size_t>(s.n_competitors));
      for (auto& bid : r.competing_bids) bid = std::min(competing(rng), s.competing_cap);
      out.push_back(std::move(r));
    }
  }
  return out;
}

bool sample_event(double probability, RngStream& rng) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ValidationError("event probability must lie in [0,1]");
  }
  return uniform01(rng) < probability;
}

}  // namespace cpbid::data
