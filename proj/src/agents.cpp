#include "cpbid/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cpbid/error.hpp"

namespace cpbid::agents {

DualState init_dual_state(double budget, std::int64_t horizon) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ValidationError("budget must be positive");
  if (horizon < 1) throw ValidationError("horizon must be positive");
  const double t = static_cast<double>(horizon);
  const double rho = budget / t;
  DualState s;
  s.initial_budget = budget;
  s.remaining_budget = budget;
  s.per_round_budget = rho;
  s.phi = 1.0 / std::sqrt(t);
  s.eta = 1.0 / ((1.0 + rho * rho) * std::sqrt(t));
  return s;
}

double compute_bid(const DualState& state, double v_hat, double min_bid_budget) {
  if (state.remaining_budget < min_bid_budget) return 0.0;
  return (1.0 + state.lambda) / (state.mu + state.lambda) * v_hat;
}

DualState update_duals(const DualState& state, double v_hat, const mechanism::AuctionOutcome& outcome) {
  if (outcome.payment > state.remaining_budget) {
    std::ostringstream msg;
    msg << "payment " << outcome.payment << " overdraws remaining budget " << state.remaining_budget
        << " at round " << state.round;
    throw InvariantError(msg.str());
  }
  DualState next = state;
  const double g = v_hat * outcome.allocation - outcome.payment;
  next.lambda = std::max(state.lambda * std::exp(-state.phi * g), kLambdaFloor);
  const double g_budget = state.per_round_budget - outcome.payment;
  next.mu = std::max(0.0, state.mu - state.eta * g_budget);
  next.remaining_budget = state.remaining_budget - outcome.payment;
  ++next.round;
  return next;
}

std::string_view to_string(ValueSource source) {
  switch (source) {
    case ValueSource::Adjust: return "Adjust";
    case ValueSource::Pred: return "Pred";
    case ValueSource::True: return "True";
  }
  return "?";
}

UcbState init_ucb_state(double max_bid, double budget, std::size_t grid_size, double cost_floor) {
  if (grid_size < 2) throw ValidationError("UCB grid needs at least two points");
  if (!(max_bid > 0.0)) throw ValidationError("UCB grid needs a positive maximum bid");
  if (!(cost_floor > 0.0)) throw ValidationError("UCB cost floor must be positive");
  UcbState s;
  s.grid.resize(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k) {
    s.grid[k] = max_bid * static_cast<double>(k) / static_cast<double>(grid_size - 1);
  }
  s.grid.back() = max_bid;
  s.pulls.assign(grid_size, 0);
  s.wins.assign(grid_size, 0);
  s.conversions.assign(grid_size, 0);
  s.spend.assign(grid_size, 0.0);
  s.remaining_budget = budget;
  s.cost_floor = cost_floor;
  return s;
}

std::optional<std::size_t> ucb_select_arm(const UcbState& state, RngStream& rng) {
  const std::size_t k = state.grid.size();
  if (state.remaining_budget <= 0.0) return std::nullopt;

  // A truthful auction never charges more than the bid, so an arm is
  // affordable when its bid level fits in the remaining budget.
  for (std::size_t a = 0; a < k; ++a) {
    if (state.grid[a] <= state.remaining_budget && state.pulls[a] == 0) return a;
  }

  const double log_t = std::log(static_cast<double>(std::max<std::int64_t>(state.total_pulls, 1)));
  double best = -std::numeric_limits<double>::infinity();
  std::size_t n_best = 0;
  std::size_t chosen = k;
  for (std::size_t a = 0; a < k; ++a) {
    if (state.grid[a] > state.remaining_budget) continue;
    const double n = static_cast<double>(state.pulls[a]);
    const double rate = static_cast<double>(state.conversions[a]) / n;
    const double radius = std::sqrt(2.0 * log_t / n);
    const double cost_per_win =
        state.wins[a] > 0 ? state.spend[a] / static_cast<double>(state.wins[a]) : 0.0;
    const double index = (rate + radius) / std::max(cost_per_win, state.cost_floor);
    if (index > best) {
      best = index;
      chosen = a;
      n_best = 1;
    } else if (index == best) {
      // Reservoir choice among exact ties.
      ++n_best;
      if (rng() % n_best == 0) chosen = a;
    }
  }
  if (chosen == k) return std::nullopt;
  return chosen;
}

double ucb_select_bid(const UcbState& state, RngStream& rng) {
  auto arm = ucb_select_arm(state, rng);
  return arm ? state.grid[*arm] : 0.0;
}

UcbState ucb_update(UcbState state, std::size_t arm, const mechanism::AuctionOutcome& outcome,
                    bool conversion) {
  if (arm >= state.grid.size()) throw ValidationError("UCB arm index out of range");
  ++state.pulls[arm];
  ++state.total_pulls;
  if (outcome.allocation > 0.0) {
    ++state.wins[arm];
    if (conversion) ++state.conversions[arm];
  }
  state.spend[arm] += outcome.payment;
  state.remaining_budget -= outcome.payment;
  return state;
}

}  // namespace cpbid::agents
