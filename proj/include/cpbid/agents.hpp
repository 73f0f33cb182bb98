#pragma once

// Online bidding policies: dual mirror descent under budget and
// return-on-spend constraints, and a grid UCB baseline.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cpbid/mechanism.hpp"
#include "cpbid/rng.hpp"

namespace cpbid::agents {

inline constexpr double kLambdaFloor = 1e-12;

struct DualState {
  double lambda = 1.0;  // RoS dual, kept > 0
  double mu = 0.0;      // budget dual, kept >= 0
  double initial_budget = 0.0;
  double remaining_budget = 0.0;
  double phi = 0.0;  // RoS step size, 1/sqrt(T)
  double eta = 0.0;  // budget step size, 1/((1 + (B/T)^2) sqrt(T))
  double per_round_budget = 0.0;
  std::int64_t round = 1;
};

DualState init_dual_state(double budget, std::int64_t horizon);

// ((1 + lambda) / (mu + lambda)) * v_hat while the remaining budget covers
// min_bid_budget, else 0.
double compute_bid(const DualState& state, double v_hat, double min_bid_budget);

// One mirror descent step after observing the outcome of the bid issued from
// `state`. Throws InvariantError if the payment overdraws the budget.
DualState update_duals(const DualState& state, double v_hat, const mechanism::AuctionOutcome& outcome);

enum class ValueSource { Adjust, Pred, True };

std::string_view to_string(ValueSource source);

// Grid bandit baseline. Arms are bid levels spread uniformly over [0, max_bid].
struct UcbState {
  std::vector<double> grid;
  std::vector<std::int64_t> pulls;
  std::vector<std::int64_t> wins;
  std::vector<std::int64_t> conversions;
  std::vector<double> spend;
  double remaining_budget = 0.0;
  double cost_floor = 0.1;
  std::int64_t total_pulls = 0;
};

inline constexpr std::size_t kDefaultUcbGridSize = 50;

UcbState init_ucb_state(double max_bid, double budget, std::size_t grid_size = kDefaultUcbGridSize,
                        double cost_floor = 0.1);

// Index of the chosen arm, or nullopt when no arm is affordable. Unpulled
// affordable arms go first (lowest index). Otherwise the arm maximizing
//   (conversions/pulls + sqrt(2 ln t / pulls)) / max(spend/wins, cost_floor)
// is chosen, with exact ties broken by the rng stream.
std::optional<std::size_t> ucb_select_arm(const UcbState& state, RngStream& rng);

// Bid of the selected arm, 0 when nothing is affordable.
double ucb_select_bid(const UcbState& state, RngStream& rng);

UcbState ucb_update(UcbState state, std::size_t arm, const mechanism::AuctionOutcome& outcome,
                    bool conversion);

}  // namespace cpbid::agents
