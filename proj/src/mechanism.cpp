#include "cpbid/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpbid/error.hpp"

namespace cpbid::mechanism {

namespace {

void check_bid(double bid) {
  if (!std::isfinite(bid) || bid < 0.0) throw ValidationError("bid must be finite and >= 0");
}

}  // namespace

AuctionOutcome second_price_outcome(double bid, const SecondPriceRound& round) {
  check_bid(bid);
  if (round.competing_bids.empty()) throw ValidationError("second-price round without competitors");
  const double highest = *std::max_element(round.competing_bids.begin(), round.competing_bids.end());

  bool won = bid > highest;
  if (bid == highest) {
    switch (round.tie_rule) {
      case TieRule::AgentWins: won = true; break;
      case TieRule::AgentLoses: won = false; break;
      case TieRule::SeededRandom: won = round.tie_coin; break;
    }
  }
  AuctionOutcome out;
  out.won = won;
  out.allocation = won ? 1.0 : 0.0;
  out.payment = won ? highest : 0.0;
  out.price_threshold = highest;
  return out;
}

AuctionOutcome ecpm_outcome(double bid, const EcpmRound& round) {
  check_bid(bid);
  if (!(round.pctr >= 0.0 && round.pctr <= 1.0)) throw ValidationError("pctr must lie in [0,1]");
  if (round.competing_ecpm_max < 0.0) throw ValidationError("competing eCPM must be >= 0");

  AuctionOutcome out;
  if (round.pctr == 0.0) {
    if (bid > 0.0) throw UndefinedError("eCPM threshold undefined for pctr = 0");
    out.price_threshold = std::numeric_limits<double>::infinity();
    return out;
  }
  const double scale = round.pctr * 1000.0;
  const double threshold = round.competing_ecpm_max / scale;
  out.won = bid * scale >= round.competing_ecpm_max;
  out.allocation = (out.won && round.click) ? 1.0 : 0.0;
  out.payment = threshold * out.allocation;
  out.price_threshold = threshold;
  return out;
}

}  // namespace cpbid::mechanism
