#pragma once

// Truthful single-slot auction engines. Both engines are pure: any randomness
// (tie coins, click realizations) is injected through the round.

#include <span>

namespace cpbid::mechanism {

struct AuctionOutcome {
  bool won = false;              // slot won
  double allocation = 0.0;       // realized x_t(b_t)
  double payment = 0.0;          // realized p_t(b_t)
  double price_threshold = 0.0;  // smallest winning bid (cost to win)
};

enum class TieRule { AgentWins, AgentLoses, SeededRandom };

struct SecondPriceRound {
  std::span<const double> competing_bids;
  TieRule tie_rule = TieRule::AgentLoses;
  bool tie_coin = false;  // consulted only under SeededRandom; true means the agent wins
};

// Highest bid wins and pays the highest competing bid.
AuctionOutcome second_price_outcome(double bid, const SecondPriceRound& round);

struct EcpmRound {
  double pctr = 0.0;
  double competing_ecpm_max = 0.0;
  bool click = false;
};

// eCPM-ranked pay-per-click. The slot is won iff bid * pctr * 1000 >=
// competing_ecpm_max; the allocation is 1 only on a won slot with a click, and
// the Myerson payment for that step allocation is the threshold price
// competing_ecpm_max / (pctr * 1000).
AuctionOutcome ecpm_outcome(double bid, const EcpmRound& round);

}  // namespace cpbid::mechanism
