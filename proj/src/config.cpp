#include "cpbid/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpbid/error.hpp"

namespace cpbid::runner {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

data::GeneratorSettings parse_generator(const json& j) {
  reject_unknown(j,
                 {"n_types", "n_periods", "auctions_per_period", "mu_low", "mu_high", "bias", "sigma",
                  "n_competitors", "competing_median", "competing_log_sd", "competing_cap", "pctr_low",
                  "pctr_high"},
                 "dataset.generator");
  data::GeneratorSettings g;
  const std::string w = "dataset.generator";
  read(j, "n_types", g.n_types, w);
  read(j, "n_periods", g.n_periods, w);
  read(j, "auctions_per_period", g.auctions_per_period, w);
  read(j, "mu_low", g.mu_low, w);
  read(j, "mu_high", g.mu_high, w);
  read(j, "bias", g.bias, w);
  read(j, "sigma", g.sigma, w);
  read(j, "n_competitors", g.n_competitors, w);
  read(j, "competing_median", g.competing_median, w);
  read(j, "competing_log_sd", g.competing_log_sd, w);
  read(j, "competing_cap", g.competing_cap, w);
  read(j, "pctr_low", g.pctr_low, w);
  read(j, "pctr_high", g.pctr_high, w);
  data::validate(g);
  return g;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

DatasetSource parse_dataset(const json& j, const std::filesystem::path& base) {
  reject_unknown(j, {"source", "seed", "generator", "auction_log", "campaigns"}, "dataset");
  DatasetSource d;
  std::string source = "synthetic";
  read(j, "source", source, "dataset");
  if (source == "synthetic") {
    d.kind = DatasetSource::Kind::Synthetic;
    if (j.contains("generator")) d.generator = parse_generator(j.at("generator"));
    read(j, "seed", d.generator_seed, "dataset");
  } else if (source == "file") {
    d.kind = DatasetSource::Kind::File;
    std::string log;
    read(j, "auction_log", log, "dataset");
    if (log.empty()) throw ConfigError("dataset.auction_log is required for file sources");
    d.auction_log = resolve(base, log);
    std::string campaigns;
    read(j, "campaigns", campaigns, "dataset");
    if (!campaigns.empty()) d.campaigns_file = resolve(base, campaigns);
  } else {
    throw ConfigError("dataset.source must be 'synthetic' or 'file'");
  }
  return d;
}

template <typename Enum>
Enum parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, Enum>> options,
                const char* key) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  throw ConfigError(std::string("invalid value '") + value + "' for " + key);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Adjust: return "Adjust";
    case Method::Pred: return "Pred";
    case Method::True: return "True";
    case Method::Ucb: return "UCB";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "Adjust") return Method::Adjust;
  if (name == "Pred") return Method::Pred;
  if (name == "True") return Method::True;
  if (name == "UCB") return Method::Ucb;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected Adjust, Pred, True, UCB)");
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"schema_version", "dataset", "calibration_periods", "test_periods", "methods", "alpha",
                  "coverage_mode", "unknown_bin", "n_bins", "zeta", "ucb_grid_size", "ucb_cost_floor",
                  "horizon", "seeds", "campaigns", "mechanism", "tie_rule", "calibration_seed",
                  "min_bid_budget", "ratio", "record_wall_time", "threads", "verify"},
                 "config");
  ExperimentConfig c;
  const std::string w = "config";
  read(j, "schema_version", c.schema_version, w);
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  }
  if (j.contains("dataset")) c.dataset = parse_dataset(j.at("dataset"), base_dir);
  read(j, "calibration_periods", c.calibration_periods, w);
  read(j, "test_periods", c.test_periods, w);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read(j, "methods", names, w);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(parse_method(n));
  }
  read(j, "alpha", c.alpha, w);
  std::string mode = "marginal";
  read(j, "coverage_mode", mode, w);
  c.coverage_mode = parse_enum<conformal::CoverageMode>(
      mode, {{"marginal", conformal::CoverageMode::Marginal}, {"union", conformal::CoverageMode::Union}},
      "coverage_mode");
  std::string unknown = "global_pool";
  read(j, "unknown_bin", unknown, w);
  c.unknown_bin = parse_enum<conformal::UnknownBinPolicy>(
      unknown,
      {{"global_pool", conformal::UnknownBinPolicy::GlobalPool}, {"error", conformal::UnknownBinPolicy::Error}},
      "unknown_bin");
  read(j, "n_bins", c.n_bins, w);
  read(j, "zeta", c.zeta, w);
  read(j, "ucb_grid_size", c.ucb_grid_size, w);
  read(j, "ucb_cost_floor", c.ucb_cost_floor, w);
  read(j, "horizon", c.horizon, w);
  read(j, "seeds", c.seeds, w);
  if (j.contains("campaigns")) {
    const auto& arr = j.at("campaigns");
    if (!arr.is_array()) throw ConfigError("config.campaigns must be an array");
    for (const auto& cj : arr) {
      reject_unknown(cj, {"campaign_id", "budget", "tcpa"}, "campaigns[]");
      data::CampaignConfig camp;
      read(cj, "campaign_id", camp.campaign_id, "campaigns[]");
      read(cj, "budget", camp.budget, "campaigns[]");
      read(cj, "tcpa", camp.tcpa, "campaigns[]");
      c.campaigns.push_back(camp);
    }
  }
  std::string mech = "second_price";
  read(j, "mechanism", mech, w);
  c.mechanism = parse_enum<MechanismKind>(
      mech, {{"second_price", MechanismKind::SecondPrice}, {"ecpm", MechanismKind::Ecpm}}, "mechanism");
  std::string tie = "agent_loses";
  read(j, "tie_rule", tie, w);
  c.tie_rule = parse_enum<mechanism::TieRule>(tie,
                                              {{"agent_loses", mechanism::TieRule::AgentLoses},
                                               {"agent_wins", mechanism::TieRule::AgentWins},
                                               {"seeded_random", mechanism::TieRule::SeededRandom}},
                                              "tie_rule");
  read(j, "calibration_seed", c.calibration_seed, w);
  if (j.contains("min_bid_budget") && !j.at("min_bid_budget").is_null()) {
    double m = 0.0;
    read(j, "min_bid_budget", m, w);
    c.min_bid_budget = m;
  }
  read(j, "ratio", c.ratio, w);
  read(j, "record_wall_time", c.record_wall_time, w);
  read(j, "threads", c.threads, w);
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    reject_unknown(v, {"horizon"}, "verify");
    read(v, "horizon", c.verify.horizon, "verify");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void validate(const ExperimentConfig& c) {
  if (c.methods.empty()) throw ConfigError("at least one method is required");
  const bool has_true = std::find(c.methods.begin(), c.methods.end(), Method::True) != c.methods.end();
  if (c.ratio && !has_true) throw ConfigError("the True baseline is required when the ratio is requested");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (c.n_bins < 1) throw ConfigError("n_bins must be >= 1");
  if (!(c.zeta > 0.0)) throw ConfigError("zeta must be > 0");
  if (c.ucb_grid_size < 2) throw ConfigError("ucb_grid_size must be >= 2");
  if (!(c.ucb_cost_floor > 0.0)) throw ConfigError("ucb_cost_floor must be > 0");
  if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.calibration_periods.empty()) throw ConfigError("calibration_periods must not be empty");
  if (c.test_periods.empty()) throw ConfigError("test_periods must not be empty");
  for (auto p : c.test_periods) {
    if (std::find(c.calibration_periods.begin(), c.calibration_periods.end(), p) !=
        c.calibration_periods.end()) {
      throw ConfigError("period " + std::to_string(p) + " is used for both calibration and testing");
    }
  }
  for (const auto& camp : c.campaigns) {
    if (!(camp.budget > 0.0) || !(camp.tcpa > 0.0)) {
      throw ConfigError("campaign " + std::to_string(camp.campaign_id) + " needs budget > 0 and tcpa > 0");
    }
  }
  if (c.min_bid_budget && !(*c.min_bid_budget >= 0.0)) throw ConfigError("min_bid_budget must be >= 0");
  if (c.verify.horizon < 1 || c.verify.horizon > 12) throw ConfigError("verify.horizon must lie in [1,12]");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
}

conformal::MiscoverageConfig miscoverage(const ExperimentConfig& c) {
  return {c.alpha, c.coverage_mode, c.horizon};
}

}  // namespace cpbid::runner
