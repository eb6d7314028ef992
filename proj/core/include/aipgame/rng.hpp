#pragma once

#include <cstdint>
#include <string_view>

namespace aipgame {

/// Mixes two 64-bit values into one; used to derive independent seeds from
/// a base seed plus an index or token hash. Pure integer arithmetic.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// FNV-1a hash of a token string, for folding strategy names into seeds.
std::uint64_t token_hash(std::string_view token);

/// Deterministic seeded generator (splitmix64 stream). Identical seeds give
/// identical sequences; child streams are pure functions of (seed, index)
/// and never depend on the parent's position, so work can be distributed
/// across threads without changing results.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform integer in [lo, hi], inclusive on both ends.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Normal deviate via the polar (Marsaglia) method; avoids trigonometric
  /// calls so sequences are stable across standard libraries.
  double normal(double mean = 0.0, double stddev = 1.0);

  /// Independent stream derived purely from (seed, index).
  SeededRng child(std::uint64_t index) const { return SeededRng(mix_seed(seed_, index)); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_ = 0;
};

}  // namespace aipgame
