#pragma once

#include <cstdint>
#include <random>

namespace mtdiff {

using Rng = std::mt19937_64;

// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream purposes within one Monte-Carlo run.
enum class Stream : std::uint64_t { Data = 1, Activation = 2, Scenario = 3 };

/// Deterministic stream for (master seed, run index, purpose). Two different
/// triples never share a seed sequence.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t run, Stream purpose) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(run + 0x632BE59BD9B4E019ULL));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace mtdiff
