#include "cpbid/ledger.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace cpbid {

double RunLedger::total_payment() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.payment;
  return total;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_ledger_csv(std::ostream& out, const RunLedger& ledger) {
  out << kLedgerHeader << '\n';
  for (const auto& r : ledger.rows) {
    out << r.round << ',' << format_double(r.bid) << ',' << (r.won ? 1 : 0) << ','
        << format_double(r.allocation) << ',' << format_double(r.payment) << ','
        << format_double(r.lambda) << ',' << format_double(r.mu) << ','
        << format_double(r.remaining_budget) << ',' << ledger.method << ','
        << format_double(r.v_hat) << ',' << format_double(r.v_true) << '\n';
  }
}

}  // namespace cpbid
