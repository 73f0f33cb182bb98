#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpbid/conformal.hpp"
#include "cpbid/data.hpp"
#include "cpbid/mechanism.hpp"

namespace cpbid::runner {

inline constexpr int kConfigSchemaVersion = 1;

enum class Method { Adjust, Pred, True, Ucb };
enum class MechanismKind { SecondPrice, Ecpm };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct DatasetSource {
  enum class Kind { Synthetic, File };
  Kind kind = Kind::Synthetic;
  data::GeneratorSettings generator;
  std::uint64_t generator_seed = 0;
  std::filesystem::path auction_log;
  std::filesystem::path campaigns_file;  // optional for file sources
};

struct VerifyConfig {
  std::int64_t horizon = 8;  // auctions per verified sub-instance
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  DatasetSource dataset;
  std::vector<std::int64_t> calibration_periods;
  std::vector<std::int64_t> test_periods;
  std::vector<Method> methods{Method::Adjust, Method::Pred, Method::True};
  double alpha = 0.1;
  conformal::CoverageMode coverage_mode = conformal::CoverageMode::Marginal;
  conformal::UnknownBinPolicy unknown_bin = conformal::UnknownBinPolicy::GlobalPool;
  int n_bins = 100;
  double zeta = 2.0;
  std::size_t ucb_grid_size = 50;
  double ucb_cost_floor = 0.1;
  std::int64_t horizon = 2000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<data::CampaignConfig> campaigns;
  MechanismKind mechanism = MechanismKind::SecondPrice;
  mechanism::TieRule tie_rule = mechanism::TieRule::AgentLoses;
  std::uint64_t calibration_seed = 0;
  // Budget gate of the dual agent; when unset, the largest price threshold in
  // the replayed sequence (the most any round can charge).
  std::optional<double> min_bid_budget;
  bool ratio = true;
  bool record_wall_time = true;
  int threads = 0;  // 0: OpenMP default
  VerifyConfig verify;
};

// Strict: unknown keys, wrong types and inconsistent settings raise ConfigError.
// Relative dataset paths resolve against base_dir.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& config);

conformal::MiscoverageConfig miscoverage(const ExperimentConfig& config);

}  // namespace cpbid::runner
