// OpenMP executor vs serial reference on the same run list, plus calibration.

#include <benchmark/benchmark.h>

#include <json.hpp>

#include "cpbid/conformal.hpp"
#include "cpbid/runner.hpp"

using namespace cpbid;

namespace {

const runner::Experiment& experiment() {
  static const runner::Experiment ex = [] {
    auto j = nlohmann::json::parse(R"({
      "dataset": {"source": "synthetic", "seed": 2,
                  "generator": {"n_types": 5, "n_periods": 4, "auctions_per_period": 10000, "sigma": 0.05}},
      "calibration_periods": [0],
      "test_periods": [1, 2, 3],
      "methods": ["Adjust", "Pred", "True", "UCB"],
      "n_bins": 100,
      "horizon": 2000,
      "seeds": [1, 2, 3, 4, 5, 6, 7, 8],
      "campaigns": [{"campaign_id": 1, "budget": 60, "tcpa": 1}],
      "record_wall_time": false
    })");
    return runner::prepare_experiment(runner::parse_config(j.dump()));
  }();
  return ex;
}

struct Workload {
  std::vector<runner::RunInput> inputs;
  std::vector<runner::RunTask> tasks;
};

const Workload& workload() {
  static const Workload w = [] {
    Workload out;
    out.inputs = runner::build_run_inputs(experiment());
    for (std::size_t i = 0; i < out.inputs.size(); ++i) {
      for (auto m : {runner::Method::Adjust, runner::Method::Pred, runner::Method::True, runner::Method::Ucb}) {
        out.tasks.push_back({i, m});
      }
    }
    return out;
  }();
  return w;
}

void BM_ExecuteRunsParallel(benchmark::State& state) {
  const auto& ex = experiment();
  const auto& w = workload();
  auto config = ex.config;
  config.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(runner::execute_runs(w.inputs, w.tasks, ex.calibration, config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.tasks.size()));
}
BENCHMARK(BM_ExecuteRunsParallel)->Arg(0)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ExecuteRunsSerial(benchmark::State& state) {
  const auto& ex = experiment();
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(runner::execute_runs_serial(w.inputs, w.tasks, ex.calibration, ex.config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.tasks.size()));
}
BENCHMARK(BM_ExecuteRunsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Calibrate(benchmark::State& state) {
  const auto& rows = experiment().calibration.rows;
  const conformal::MiscoverageConfig cfg{0.1, conformal::CoverageMode::Marginal, 1};
  for (auto _ : state) {
    const auto table = conformal::CalibrationTable::fit(rows);
    benchmark::DoNotOptimize(conformal::AdjustmentCache(table, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
