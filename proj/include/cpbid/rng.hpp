#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cpbid {

// Purposes for independent random streams. Every stream is derived from the
// run seed plus a purpose tag, so methods compared on the same seed consume
// identical draws for the same purpose.
enum class StreamPurpose : std::uint64_t {
  Generate = 1,
  PosthocCvr = 2,
  Sampling = 3,
  Click = 4,
  Conversion = 5,
  TieBreak = 6,
  Ucb = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

using RngStream = std::mt19937_64;

inline RngStream make_stream(std::uint64_t seed, StreamPurpose purpose,
                             std::uint64_t a = 0, std::uint64_t b = 0) {
  return RngStream(derive_seed(seed, {static_cast<std::uint64_t>(purpose), a, b}));
}

// Uniform in [0, 1) built from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double uniform01(RngStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cpbid
