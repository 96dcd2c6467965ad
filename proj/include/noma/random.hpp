#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace noma {

// All randomness flows through this engine. The standard leaves the output of
// std::*_distribution implementation-defined, so draws are derived from raw
// engine words below; that keeps datasets and training runs bit-identical across
// standard libraries.
using Rng = std::mt19937_64;

// Seeds an independent stream; std::seed_seq's mixing is fully specified.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

// Uniform on the open interval (0, 1), 53-bit resolution.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open01(rng);
}

// Unit-mean exponential; strictly positive.
inline double exponential_unit(Rng& rng) { return -std::log(uniform_open01(rng)); }

// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

}  // namespace noma
