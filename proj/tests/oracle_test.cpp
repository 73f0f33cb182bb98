#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <json.hpp>

#include "cpbid/agents.hpp"
#include "cpbid/error.hpp"
#include "cpbid/mechanism.hpp"
#include "cpbid/metrics.hpp"
#include "cpbid/oracle.hpp"

using namespace cpbid;
using namespace cpbid::oracle;

namespace {

// Bitmask enumeration with explicit set comparison, independent of the
// library's depth-first search.
OracleSolution naive_optimum(const OfflineInstance& inst, const std::vector<double>& values) {
  const std::size_t t = inst.horizon();
  OracleSolution best;
  bool found = false;
  for (std::uint32_t mask = 0; mask < (1u << t); ++mask) {
    std::vector<std::size_t> set;
    double reward = 0.0, spend = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      if (mask >> i & 1u) {
        set.push_back(i);
        reward += values[i];
        spend += inst.costs[i];
      }
    }
    if (spend > inst.budget + kTolerance || spend > reward + kTolerance) continue;
    bool better = !found || reward > best.reward + kTolerance;
    if (found && std::abs(reward - best.reward) <= kTolerance) {
      if (spend < best.spend - kTolerance) {
        better = true;
      } else if (std::abs(spend - best.spend) <= kTolerance) {
        better = std::lexicographical_compare(set.begin(), set.end(), best.winning_set.begin(),
                                              best.winning_set.end());
      }
    }
    if (better) {
      found = true;
      best.winning_set = set;
      best.reward = reward;
      best.spend = spend;
    }
  }
  return best;
}

OfflineInstance random_instance(std::mt19937_64& rng, std::size_t t) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  OfflineInstance inst;
  for (std::size_t i = 0; i < t; ++i) {
    // coarse values so ties actually happen
    const double v = std::round(u(rng) * 10.0) / 10.0;
    inst.true_values.push_back(v);
    inst.adjusted_values.push_back(std::min(1.0, v + std::round(u(rng) * 3.0) / 10.0));
    inst.costs.push_back(std::round(u(rng) * 8.0) / 10.0);
  }
  inst.budget = std::round(u(rng) * static_cast<double>(t) * 3.0) / 10.0;
  return inst;
}

RunLedger ledger_of(const std::vector<double>& v, const std::vector<double>& v_hat, const std::vector<double>& x,
                    const std::vector<double>& p) {
  RunLedger l;
  l.budget = 100.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    LedgerRow r;
    r.round = static_cast<std::int64_t>(t + 1);
    r.v_true = v[t];
    r.v_hat = v_hat[t];
    r.allocation = x[t];
    r.won = x[t] > 0;
    r.payment = p[t];
    r.price_threshold = p[t];
    l.rows.push_back(r);
  }
  return l;
}

// Replays the dual mirror descent agent on a second-price instance.
RunLedger agent_run(const OfflineInstance& inst, const std::vector<double>& bid_values) {
  RunLedger l;
  l.budget = inst.budget;
  auto s = agents::init_dual_state(inst.budget, static_cast<std::int64_t>(inst.horizon()));
  const double gate = *std::max_element(inst.costs.begin(), inst.costs.end());
  for (std::size_t t = 0; t < inst.horizon(); ++t) {
    std::vector<double> comp{inst.costs[t]};
    const double b = agents::compute_bid(s, bid_values[t], gate);
    const auto o = mechanism::second_price_outcome(b, {comp});
    LedgerRow r;
    r.round = static_cast<std::int64_t>(t + 1);
    r.bid = b;
    r.won = o.won;
    r.allocation = o.allocation;
    r.payment = o.payment;
    r.v_true = inst.true_values[t];
    r.v_hat = inst.adjusted_values[t];
    r.price_threshold = o.price_threshold;
    l.rows.push_back(r);
    s = agents::update_duals(s, bid_values[t], o);
  }
  return l;
}

}  // namespace

TEST(OfflineOptimum, Examples) {
  OfflineInstance inst{{0.9, 0.5, 0.2}, {0.9, 0.5, 0.2}, {0.4, 0.3, 0.25}, 0.7};
  const auto sol = offline_optimum(inst, ValueField::True);
  EXPECT_EQ(sol.winning_set, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(sol.reward, 1.4);
  EXPECT_DOUBLE_EQ(sol.spend, 0.7);
  EXPECT_DOUBLE_EQ(sol.ros_slack, 0.7);

  inst.budget = 0.0;
  const auto none = offline_optimum(inst, ValueField::True);
  EXPECT_TRUE(none.winning_set.empty());
  EXPECT_EQ(none.reward, 0.0);

  OfflineInstance ros{{0.1}, {0.1}, {0.5}, 1.0};
  const auto r = offline_optimum(ros, ValueField::True);
  EXPECT_TRUE(r.winning_set.empty());
  EXPECT_EQ(r.reward, 0.0);
}

TEST(OfflineOptimum, TieBreaks) {
  // {0} and {1} give equal reward; {1} is cheaper.
  OfflineInstance cheaper{{0.5, 0.5}, {0.5, 0.5}, {0.4, 0.2}, 0.4};
  EXPECT_EQ(offline_optimum(cheaper, ValueField::True).winning_set, (std::vector<std::size_t>{1}));
  // equal reward and spend: lexicographic
  OfflineInstance lex{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.3, 0.3, 0.3}, 0.3};
  EXPECT_EQ(offline_optimum(lex, ValueField::True).winning_set, (std::vector<std::size_t>{0}));
  OfflineInstance prefix{{0.5, 0.2, 0.3}, {0.5, 0.2, 0.3}, {0.1, 0.1, 0.1}, 0.2};
  EXPECT_EQ(offline_optimum(prefix, ValueField::True).winning_set, (std::vector<std::size_t>{0, 2}));
}

TEST(OfflineOptimum, Errors) {
  OfflineInstance big;
  big.true_values.assign(25, 0.1);
  big.adjusted_values.assign(25, 0.1);
  big.costs.assign(25, 0.1);
  big.budget = 1;
  EXPECT_THROW(offline_optimum(big, ValueField::True), ValidationError);
  OfflineInstance bad{{1.5}, {0.5}, {0.1}, 1};
  EXPECT_THROW(offline_optimum(bad, ValueField::True), ValidationError);
  OfflineInstance ragged{{0.5, 0.2}, {0.5}, {0.1}, 1};
  EXPECT_THROW(offline_optimum(ragged, ValueField::True), ValidationError);
}

TEST(OfflineOptimum, MatchesNaiveEnumeration) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto inst = random_instance(rng, 1 + static_cast<std::size_t>(trial % 12));
    for (auto field : {ValueField::True, ValueField::Adjusted}) {
      const auto& values = field == ValueField::True ? inst.true_values : inst.adjusted_values;
      const auto got = offline_optimum(inst, field);
      const auto want = naive_optimum(inst, values);
      ASSERT_EQ(got.winning_set, want.winning_set) << "trial " << trial;
      EXPECT_NEAR(got.reward, want.reward, 1e-12);
      EXPECT_NEAR(got.spend, want.spend, 1e-12);
      // feasibility asserted independently of the search
      EXPECT_LE(got.spend, inst.budget + kTolerance);
      EXPECT_GE(got.ros_slack, -kTolerance);
    }
  }
}

TEST(OfflineOptimum, MonotoneInBudget) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng, 8);
    double prev = -1.0;
    for (int b = 0; b <= 40; ++b) {
      inst.budget = b / 10.0;
      const double r = offline_optimum(inst, ValueField::True).reward;
      EXPECT_GE(r, prev - 1e-12);
      prev = r;
    }
  }
}

TEST(OfflineOptimum, DominatesFeasibleAgentRuns) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(rng, 10);
    inst.budget = 0.5 + 2.0 * u(rng);
    const auto run = agent_run(inst, inst.true_values);
    double spend = 0.0, value = 0.0;
    for (const auto& r : run.rows) {
      spend += r.payment;
      value += r.v_true * r.allocation;
    }
    if (spend > value + kTolerance) continue;  // RoS-infeasible realization
    ++checked;
    EXPECT_GE(offline_optimum(inst, ValueField::True).reward, value - 1e-12);
  }
  EXPECT_GT(checked, 50);
}

TEST(Prop1, Examples) {
  OfflineInstance free{{0.2, 0.4, 0.6}, {0.3, 0.5, 0.9}, {0.0, 0.0, 0.0}, 0.0};
  const std::vector<double> upper = free.adjusted_values;
  const auto w = verify_prop1(free, upper);
  EXPECT_TRUE(w.holds);
  EXPECT_DOUBLE_EQ(w.upper_reward, 1.7);
  EXPECT_EQ(w.values, upper);

  OfflineInstance three{{0.9, 0.5, 0.2}, {0.9, 0.5, 0.2}, {0.4, 0.3, 0.25}, 0.7};
  const auto w3 = verify_prop1(three, three.true_values);
  EXPECT_TRUE(w3.holds);
  EXPECT_EQ(w3.winning_set, offline_optimum(three, ValueField::True).winning_set);
}

TEST(Prop1, RandomInstancesAttainUpperBounds) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const auto inst = random_instance(rng, 5);
    const auto w = verify_prop1(inst, inst.adjusted_values);
    EXPECT_TRUE(w.holds) << "seed " << seed;
    EXPECT_NEAR(w.grid_reward, w.upper_reward, 1e-12);
    for (std::size_t k = 0; k < w.winning_set.size(); ++k) {
      EXPECT_EQ(w.values[k], inst.adjusted_values[w.winning_set[k]]);
    }
  }
  OfflineInstance big;
  big.true_values.assign(13, 0.1);
  big.adjusted_values.assign(13, 0.1);
  big.costs.assign(13, 0.1);
  EXPECT_THROW(verify_prop1(big, big.adjusted_values), ValidationError);
}

TEST(Theorem3, Examples) {
  const auto same = check_theorem3(ledger_of({0.5, 0.3}, {0.5, 0.3}, {1, 1}, {0.4, 0.2}));
  EXPECT_TRUE(same.holds);
  EXPECT_EQ(same.d_max, 0.0);
  EXPECT_DOUBLE_EQ(same.lower, same.ros_hat);
  EXPECT_DOUBLE_EQ(same.upper, same.ros_hat);

  const auto one = check_theorem3(ledger_of({0.5}, {0.6}, {1}, {0.4}));
  EXPECT_TRUE(one.holds);
  EXPECT_DOUBLE_EQ(one.ros, 1.25);
  EXPECT_DOUBLE_EQ(one.ros_hat, 1.5);
  EXPECT_NEAR(one.lower, 1.0, 1e-12);
  EXPECT_NEAR(one.upper, 1.5, 1e-12);

  EXPECT_THROW(check_theorem3(ledger_of({0.5}, {0.6}, {0}, {0})), UndefinedError);
  const auto zero = check_theorem3(ledger_of({0.0, 0.5}, {0.1, 0.6}, {1, 1}, {0.1, 0.4}));
  EXPECT_FALSE(zero.skipped_reason.empty());
}

TEST(Theorem3, RandomLedgers) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v, vh, x, p;
    for (int t = 0; t < 30; ++t) {
      v.push_back(0.01 + 0.99 * u(rng));
      vh.push_back(std::clamp(v.back() + 0.4 * (u(rng) - 0.5), 0.0, 1.0));
      x.push_back(u(rng) < 0.5 ? 1.0 : 0.0);
      p.push_back(x.back() * u(rng));
    }
    x[0] = 1.0;
    p[0] = 0.1;
    EXPECT_TRUE(check_theorem3(ledger_of(v, vh, x, p)).holds) << "trial " << trial;
  }
}

TEST(Theorem2, TrueSourceHolds) {
  OfflineInstance inst{{0.9, 0.5, 0.2}, {0.9, 0.5, 0.2}, {0.4, 0.3, 0.25}, 0.7};
  const auto run = agent_run(inst, inst.true_values);
  const auto r = check_theorem2_realization(run, offline_optimum(inst, ValueField::True),
                                            offline_optimum(inst, ValueField::Adjusted));
  EXPECT_TRUE(r.skipped_reason.empty());
  EXPECT_TRUE(r.holds);
  EXPECT_DOUBLE_EQ(r.adjusted_optimum, r.true_optimum);
}

TEST(Theorem2, InflatedValues) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    OfflineInstance inst;
    for (int t = 0; t < 5; ++t) {
      inst.true_values.push_back(0.05 + 0.9 * u(rng));
      inst.adjusted_values.push_back(std::min(inst.true_values.back() + 0.1, 1.0));
      inst.costs.push_back(0.6 * u(rng));
    }
    inst.budget = 0.3 + u(rng);
    const auto run = agent_run(inst, inst.adjusted_values);
    const auto r = check_theorem2_realization(run, offline_optimum(inst, ValueField::True),
                                              offline_optimum(inst, ValueField::Adjusted));
    ASSERT_TRUE(r.skipped_reason.empty());
    EXPECT_TRUE(r.holds) << "seed " << seed;
    EXPECT_GE(r.adjusted_optimum, r.true_optimum);
  }
}

TEST(Theorem2, SkipsWithoutCoverage) {
  const auto l = ledger_of({0.5, 0.7}, {0.6, 0.6}, {1, 0}, {0.3, 0});
  const auto r = check_theorem2_realization(l, OracleSolution{}, OracleSolution{});
  EXPECT_FALSE(r.skipped_reason.empty());
  const auto records = to_records(r, "x");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_FALSE(records[0].holds);
  EXPECT_EQ(records[0].skipped_reason, r.skipped_reason);
}

TEST(Prop2, Examples) {
  EXPECT_TRUE(check_prop2(0.0, 0.0, 0.0));
  EXPECT_TRUE(check_prop2(0.3, 0.05, 0.1));
  EXPECT_TRUE(check_prop2(0.25, 0.05, 0.1));
  EXPECT_FALSE(check_prop2(0.31, 0.05, 0.1));
}

TEST(Records, Json) {
  std::vector<CheckRecord> recs{{"prop1", "a", true, 1.0, 1.0, ""},
                                {"theorem3_lower", "b", false, INFINITY, 0.5, "why"}};
  const auto j = nlohmann::json::parse(records_to_json(recs));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["check"], "prop1");
  EXPECT_TRUE(j[0]["skipped_reason"].is_null());
  EXPECT_TRUE(j[1]["lhs"].is_null());
  EXPECT_EQ(j[1]["skipped_reason"], "why");
  EXPECT_EQ(j[1]["holds"], false);
}
