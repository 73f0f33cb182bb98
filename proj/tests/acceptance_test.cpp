// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpbid/conformal.hpp"
#include "cpbid/mechanism.hpp"
#include "cpbid/metrics.hpp"
#include "cpbid/oracle.hpp"
#include "cpbid/rng.hpp"
#include "cpbid/runner.hpp"

using namespace cpbid;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every ledger simulated anywhere in the suite, summarized for the budget check.
struct BudgetAudit {
  std::size_t ledgers = 0;
  std::size_t overdrawn = 0;
  double worst_slack = std::numeric_limits<double>::infinity();  // min of B - spend

  void add(const RunLedger& l) {
    ++ledgers;
    const double spend = l.total_payment();
    if (spend > l.budget) ++overdrawn;
    worst_slack = std::min(worst_slack, l.budget - spend);
  }
  void add(const std::vector<RunLedger>& ls) {
    for (const auto& l : ls) add(l);
  }
};

BudgetAudit audit;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), std::uint64_t{1});
  return s;
}

runner::ExperimentConfig parse(const json& j) { return runner::parse_config(j.dump()); }

// 5 distribution types; periods 0-4 calibrate (one period of each type),
// periods 5-9 are the test periods.
json five_type_config(double bias, double sigma, int per_period) {
  return {{"dataset",
           {{"source", "synthetic"},
            {"seed", 2024},
            {"generator",
             {{"n_types", 5},
              {"n_periods", 10},
              {"auctions_per_period", per_period},
              {"bias", bias},
              {"sigma", sigma}}}}},
          {"calibration_periods", {0, 1, 2, 3, 4}},
          {"test_periods", {5, 6, 7, 8, 9}},
          {"alpha", 0.1},
          {"n_bins", 100},
          {"horizon", 2000},
          {"record_wall_time", false}};
}

// 1: marginal coverage on synthetic data.
Outcome coverage_target() {
  const auto t0 = std::chrono::steady_clock::now();
  auto j = five_type_config(0.0, 0.05, 2000);
  j["methods"] = {"Adjust"};
  j["ratio"] = false;
  j["seeds"] = seed_range(20);
  j["campaigns"] = {{{"campaign_id", 1}, {"budget", 100}, {"tcpa", 1}}};
  const auto ex = runner::prepare_experiment(parse(j));
  const auto r = runner::run_experiment(ex);
  audit.add(r.ledgers);
  std::vector<double> cov;
  for (const auto& l : r.ledgers) cov.push_back(metrics::coverage(l));
  const double mean = metrics::mean(cov);
  const double secs = seconds_since(t0);
  const bool pass = mean >= 0.88 && mean <= 0.95 && secs < 10.0;
  return {pass, "mean coverage " + fmt("%.4f", mean) + " over " + std::to_string(cov.size()) +
                    " runs (n=10000, T=2000, 20 seeds), band [0.88, 0.95]; " + fmt("%.2f", secs) + " s < 10 s"};
}

// 2: simultaneous coverage over a horizon in union mode. Each horizon redraws
// the calibration set; bins are the distribution types.
Outcome uniform_coverage() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kTypes = 5;
  constexpr int kPerBin = 2000;
  constexpr std::int64_t kHorizon = 20;
  constexpr int kRepeats = 1000;
  const double mu[kTypes] = {0.05, 0.12, 0.25, 0.4, 0.6};
  const double sd[kTypes] = {0.02, 0.04, 0.05, 0.08, 0.1};
  const double bias = 0.03;
  const conformal::MiscoverageConfig cfg{0.1, conformal::CoverageMode::Union, kHorizon};

  int all_covered = 0;
  for (int rep = 0; rep < kRepeats; ++rep) {
    auto rng = make_stream(static_cast<std::uint64_t>(rep), StreamPurpose::Generate, 2);
    std::normal_distribution<double> z(0.0, 1.0);
    auto draw = [&](int k) { return std::clamp(mu[k] + sd[k] * z(rng), 0.0, 1.0); };
    std::vector<conformal::CalibrationRow> rows;
    rows.reserve(kTypes * kPerBin);
    for (int k = 0; k < kTypes; ++k) {
      for (int i = 0; i < kPerBin; ++i) rows.push_back({k, mu[k] - bias, draw(k)});
    }
    const auto table = conformal::CalibrationTable::fit(rows);
    const conformal::AdjustmentCache cache(table, cfg);
    bool ok = true;
    for (std::int64_t t = 0; t < kHorizon; ++t) {
      const int k = static_cast<int>(rng() % kTypes);
      ok = ok && draw(k) <= conformal::adjusted_value(mu[k] - bias, cache(k)).v_hat;
    }
    all_covered += ok;
  }
  const double freq = static_cast<double>(all_covered) / kRepeats;
  const double secs = seconds_since(t0);
  const bool pass = freq >= 0.87 && secs < 30.0;
  return {pass, "all-t coverage " + fmt("%.3f", freq) + " over 1000 horizons (T=20, beta=alpha/T, 2000 per bin) >= 0.87; " +
                    fmt("%.2f", secs) + " s < 30 s"};
}

// 3: Adjust beats Pred and stays near True with biased, noisy predictions.
json ordering_config() {
  auto j = five_type_config(0.05, 0.05, 4000);
  j["dataset"]["generator"]["mu_low"] = 0.06;
  j["methods"] = {"Adjust", "Pred", "True"};
  j["seeds"] = seed_range(50);
  j["campaigns"] = {{{"campaign_id", 1}, {"budget", 600}, {"tcpa", 1}}};
  return j;
}

Outcome method_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ex = runner::prepare_experiment(parse(ordering_config()));
  const auto r = runner::run_experiment(ex);
  audit.add(r.ledgers);
  std::vector<double> adj, pred, tru;
  for (const auto& m : r.metrics) {
    if (m.method == "Adjust") adj.push_back(m.score);
    if (m.method == "Pred") pred.push_back(m.score);
    if (m.method == "True") tru.push_back(m.score);
  }
  const auto ra = metrics::ratio(adj, tru);
  const auto rp = metrics::ratio(pred, tru);
  const double secs = seconds_since(t0);
  const bool pass = ra.ratio > rp.ratio && ra.ratio >= 0.95 && secs < 60.0;
  return {pass, "Ratio(Adjust) " + fmt("%.4f", ra.ratio) + " +- " + fmt("%.4f", ra.pair_ratio_std) +
                    ", Ratio(Pred) " + fmt("%.4f", rp.ratio) + " +- " + fmt("%.4f", rp.pair_ratio_std) + " (" +
                    std::to_string(adj.size()) + " paired runs); need Adjust > Pred and Adjust >= 0.95; " +
                    fmt("%.2f", secs) + " s < 60 s"};
}

// 5: RoS violation grows no faster than sqrt(T) log T.
Outcome violation_growth(std::string& extra) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::int64_t> horizons{1000, 4000, 16000};
  std::vector<double> adjusted_norm, widened_norm;
  for (auto T : horizons) {
    json j = {{"dataset",
               {{"source", "synthetic"},
                {"seed", 77},
                {"generator",
                 {{"n_types", 1}, {"n_periods", 2}, {"auctions_per_period", 16000}, {"sigma", 0.05},
                  {"mu_low", 0.01}, {"mu_high", 0.3}}}}},
              {"calibration_periods", {0}},
              {"test_periods", {1}},
              {"methods", {"Adjust"}},
              {"ratio", false},
              {"horizon", T},
              {"seeds", seed_range(20)},
              {"campaigns", {{{"campaign_id", 1}, {"budget", 0.5 * static_cast<double>(T)}, {"tcpa", 1}}}},
              {"record_wall_time", false}};
    const auto r = runner::run_experiment(runner::prepare_experiment(parse(j)));
    audit.add(r.ledgers);
    std::vector<double> adj, wid;
    for (const auto& l : r.ledgers) {
      if (!(l.total_payment() > 0.0)) {
        adj.push_back(0.0);
        wid.push_back(0.0);
        continue;
      }
      const auto ros = metrics::ros_summary(l);
      adj.push_back(ros.adjusted_violation);
      wid.push_back(ros.violation);
    }
    const double scale = std::sqrt(static_cast<double>(T)) * std::log(static_cast<double>(T));
    adjusted_norm.push_back(metrics::mean(adj) / scale);
    widened_norm.push_back(metrics::mean(wid) / scale);
  }
  const double secs = seconds_since(t0);
  auto growth_ok = [](const std::vector<double>& v) { return v.back() <= 3.0 * v.front(); };
  const bool pass = growth_ok(adjusted_norm) && growth_ok(widened_norm) && secs < 120.0;
  std::ostringstream d;
  d << "violation/(sqrt(T) log T) at T=1000,4000,16000: adjusted-value form " << fmt("%.3g", adjusted_norm[0]) << ", "
    << fmt("%.3g", adjusted_norm[1]) << ", " << fmt("%.3g", adjusted_norm[2]) << "; widened true-value form "
    << fmt("%.3g", widened_norm[0]) << ", " << fmt("%.3g", widened_norm[1]) << ", " << fmt("%.3g", widened_norm[2])
    << "; need last <= 3x first; " << fmt("%.2f", secs) << " s < 120 s";
  extra = d.str();
  return {pass, extra};
}

// 6: RoS sandwich on simulated ledgers.
Outcome theorem3_sandwich() {
  const auto t0 = std::chrono::steady_clock::now();
  auto j = five_type_config(0.03, 0.05, 2000);
  j["methods"] = {"Adjust", "Pred"};
  j["ratio"] = false;
  j["horizon"] = 300;
  j["seeds"] = seed_range(100);
  j["campaigns"] = {{{"campaign_id", 1}, {"budget", 8}, {"tcpa", 1}}};
  const auto r = runner::run_experiment(runner::prepare_experiment(parse(j)));
  audit.add(r.ledgers);
  std::size_t checked = 0, held = 0;
  for (const auto& l : r.ledgers) {
    if (!(l.total_payment() > 0.0)) continue;
    const auto rep = oracle::check_theorem3(l);
    if (!rep.skipped_reason.empty()) continue;
    ++checked;
    held += rep.holds;
  }
  const double secs = seconds_since(t0);
  const bool pass = checked >= 1000 && held == checked && secs < 30.0;
  return {pass, std::to_string(held) + "/" + std::to_string(checked) +
                    " ledgers with v_min > 0 satisfy the sandwich within 1e-9 (need >= 1000, all); " +
                    fmt("%.2f", secs) + " s < 30 s"};
}

// 7: brute-force oracle checks on small covered instances.
Outcome oracle_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  auto j = five_type_config(0.03, 0.05, 2000);
  j["methods"] = {"Adjust"};
  j["ratio"] = false;
  j["horizon"] = 10;
  j["verify"] = {{"horizon", 10}};
  j["seeds"] = seed_range(300);
  j["campaigns"] = {{{"campaign_id", 1}, {"budget", 0.4}, {"tcpa", 1}}};
  const auto records = runner::run_verification(runner::prepare_experiment(parse(j)));

  // Group by instance: covered instances are those whose theorem-2 records are not skipped.
  std::map<std::string, std::vector<const oracle::CheckRecord*>> by_instance;
  for (const auto& r : records) by_instance[r.instance_id].push_back(&r);
  std::size_t covered = 0, covered_ok = 0;
  for (const auto& [id, recs] : by_instance) {
    bool is_covered = true, ok = true;
    for (const auto* r : recs) {
      if (r->check.rfind("theorem2", 0) == 0 && !r->skipped_reason.empty()) is_covered = false;
      if (r->check == "prop1" || r->check.rfind("theorem2", 0) == 0) ok = ok && r->holds;
    }
    if (!is_covered) continue;
    ++covered;
    covered_ok += ok;
  }
  const double secs = seconds_since(t0);
  const bool pass = covered >= 200 && covered_ok == covered && secs < 60.0;
  return {pass, std::to_string(covered_ok) + "/" + std::to_string(covered) +
                    " covered T=10 instances pass prop1 and both theorem-2 inequalities (need >= 200, all; " +
                    std::to_string(by_instance.size()) + " instances drawn); " + fmt("%.2f", secs) + " s < 60 s"};
}

// 8: interval width bound against known prediction and approximation error.
Outcome prop2_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kBins = 10;
  int held = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 100; ++c) {
    auto rng = make_stream(static_cast<std::uint64_t>(c), StreamPurpose::Generate, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double eps = 0.01 + 0.1 * u(rng);   // noise bound
    const double bias = 0.08 * u(rng);        // prediction error scale
    std::vector<double> mu(kBins), mu_hat(kBins);
    double pred_sup = 0.0;
    for (int b = 0; b < kBins; ++b) {
      mu[static_cast<std::size_t>(b)] = 0.15 + 0.7 * u(rng);
      mu_hat[static_cast<std::size_t>(b)] = mu[static_cast<std::size_t>(b)] + bias * (2.0 * u(rng) - 1.0);
      pred_sup = std::max(pred_sup, std::abs(mu_hat[static_cast<std::size_t>(b)] - mu[static_cast<std::size_t>(b)]));
    }
    double approx_sup = 0.0;
    auto draw = [&](int b) {
      const double v = mu[static_cast<std::size_t>(b)] + eps * (2.0 * u(rng) - 1.0);
      approx_sup = std::max(approx_sup, std::abs(v - mu[static_cast<std::size_t>(b)]));
      return v;
    };
    std::vector<conformal::CalibrationRow> rows;
    for (int b = 0; b < kBins; ++b) {
      for (int i = 0; i < 200; ++i) rows.push_back({b, mu_hat[static_cast<std::size_t>(b)], draw(b)});
    }
    const auto table = conformal::CalibrationTable::fit(rows);
    const conformal::AdjustmentCache cache(table, {0.1, conformal::CoverageMode::Marginal, 1});
    double d_max = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const int b = static_cast<int>(rng() % kBins);
      const double v = draw(b);
      d_max = std::max(d_max, std::abs(conformal::adjusted_value(mu_hat[static_cast<std::size_t>(b)], cache(b)).v_hat - v));
    }
    held += oracle::check_prop2(d_max, pred_sup, approx_sup);
    worst_margin = std::min(worst_margin, 2.0 * (pred_sup + approx_sup) - d_max);
  }
  const double secs = seconds_since(t0);
  const bool pass = held == 100 && secs < 10.0;
  return {pass, std::to_string(held) + "/100 configurations satisfy d_max <= 2(pred + approx) (smallest margin " +
                    fmt("%.4f", worst_margin) + "); " + fmt("%.2f", secs) + " s < 10 s"};
}

// 9: grid-deviation truthfulness for both mechanisms.
Outcome truthfulness() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = make_stream(9, StreamPurpose::Generate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sp_ok = 0, ec_ok = 0;
  for (int round = 0; round < 1000; ++round) {
    const double v = 2.0 * u(rng);
    std::vector<double> comp{2.0 * u(rng), 2.0 * u(rng)};
    const mechanism::SecondPriceRound sp{comp, mechanism::TieRule::AgentLoses};
    const mechanism::EcpmRound ec{0.005 + 0.2 * u(rng), 200.0 * u(rng), u(rng) < 0.5};
    auto util_sp = [&](double b) {
      const auto o = mechanism::second_price_outcome(b, sp);
      return v * o.allocation - o.payment;
    };
    auto util_ec = [&](double b) {
      const auto o = mechanism::ecpm_outcome(b, ec);
      return v * o.allocation - o.payment;
    };
    bool a = true, b = true;
    for (int k = 0; k <= 100; ++k) {
      const double bid = 2.0 * k / 100.0;
      a = a && util_sp(v) >= util_sp(bid) - 1e-12;
      b = b && util_ec(v) >= util_ec(bid) - 1e-12;
    }
    sp_ok += a;
    ec_ok += b;
  }
  const double secs = seconds_since(t0);
  const bool pass = sp_ok == 1000 && ec_ok == 1000 && secs < 10.0;
  return {pass, "truthful bidding optimal on the 101-bid grid in " + std::to_string(sp_ok) + "/1000 second-price and " +
                    std::to_string(ec_ok) + "/1000 eCPM rounds; " + fmt("%.2f", secs) + " s < 10 s"};
}

// 10: per-run wall time shape at desk scale.
Outcome timing_shape() {
  const auto t0 = std::chrono::steady_clock::now();
  json j = {{"dataset",
             {{"source", "synthetic"},
              {"seed", 10},
              {"generator", {{"n_types", 5}, {"n_periods", 6}, {"auctions_per_period", 10000}, {"sigma", 0.05}}}}},
            {"calibration_periods", {0}},
            {"test_periods", {1}},
            {"methods", {"Adjust", "Pred", "True", "UCB"}},
            {"horizon", 2700},
            {"seeds", seed_range(50)},
            {"campaigns", {{{"campaign_id", 1}, {"budget", 80}, {"tcpa", 1}}}},
            {"record_wall_time", true}};
  const auto ex = runner::prepare_experiment(parse(j));
  // Serial execution keeps the per-run clocks free of contention.
  const auto r = runner::run_experiment(ex, runner::Execution::Serial);
  audit.add(r.ledgers);
  std::map<std::string, std::vector<double>> wall;
  for (const auto& l : r.ledgers) wall[l.method].push_back(l.wall_time_s);
  const double adj = metrics::mean(wall["Adjust"]);
  const double pred = metrics::mean(wall["Pred"]);
  const double ucb = metrics::mean(wall["UCB"]);
  const double secs = seconds_since(t0);
  const bool pass = adj <= 5.0 * pred && ucb >= 10.0 * adj && secs < 120.0;
  return {pass, "mean per-run wall time Adjust " + fmt("%.3g", adj) + " s, Pred " + fmt("%.3g", pred) + " s, UCB " +
                    fmt("%.3g", ucb) + " s; Adjust/Pred " + fmt("%.2f", adj / pred) + " <= 5, UCB/Adjust " +
                    fmt("%.1f", ucb / adj) + " >= 10; " + fmt("%.2f", secs) + " s < 120 s"};
}

// 11: byte-identical metrics across re-runs.
Outcome determinism() {
  auto metrics_csv = [](const runner::SimulationResult& r) {
    std::ostringstream out;
    runner::write_metrics_csv(out, r.metrics);
    return out.str();
  };
  auto j = ordering_config();
  j["methods"] = {"Adjust", "Pred", "True", "UCB"};
  j["seeds"] = seed_range(10);
  const auto config = parse(j);
  const auto a = runner::run_experiment(runner::prepare_experiment(config));
  const auto b = runner::run_experiment(runner::prepare_experiment(config));
  const auto c = runner::run_experiment(runner::prepare_experiment(config), runner::Execution::Serial);
  audit.add(a.ledgers);
  const auto sa = metrics_csv(a);
  const bool pass = sa == metrics_csv(b) && sa == metrics_csv(c);
  return {pass, "metrics CSV of " + std::to_string(a.metrics.size()) +
                    " runs identical across two parallel re-runs and a serial run (" + std::to_string(sa.size()) +
                    " bytes)"};
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  std::string c5;
  std::vector<Item> items{
      {1, "coverage target", coverage_target},
      {2, "uniform coverage", uniform_coverage},
      {3, "method ordering", method_ordering},
      {5, "RoS violation growth", [&] { return violation_growth(c5); }},
      {6, "RoS sandwich", theorem3_sandwich},
      {7, "oracle checks", oracle_checks},
      {8, "interval width bound", prop2_bound},
      {9, "truthfulness", truthfulness},
      {10, "timing shape", timing_shape},
      {11, "determinism", determinism},
  };
  std::map<int, Outcome> results;
  for (const auto& item : items) {
    Outcome o;
    try {
      o = item.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    results[item.id] = o;
  }
  // 4 audits every ledger produced above.
  results[4] = {audit.overdrawn == 0 && audit.ledgers > 0,
                std::to_string(audit.ledgers - audit.overdrawn) + "/" + std::to_string(audit.ledgers) +
                    " ledgers with total payment <= budget (smallest slack " + fmt("%.6g", audit.worst_slack) + ")"};

  const char* names[] = {"",          "coverage target",      "uniform coverage", "method ordering",
                         "budget safety", "RoS violation growth", "RoS sandwich",     "oracle checks",
                         "interval width bound", "truthfulness", "timing shape",    "determinism"};
  int failed = 0;
  for (const auto& [id, o] : results) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << names[id] << ": " << o.detail << '\n';
    failed += !o.pass;
  }
  std::cout << (failed == 0 ? "all acceptance criteria pass" : std::to_string(failed) + " criteria fail") << '\n';
  return failed == 0 ? 0 : 1;
}
