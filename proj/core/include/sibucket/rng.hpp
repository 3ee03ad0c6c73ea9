#pragma once

#include <array>
#include <cstdint>

namespace sibucket {

/// SplitMix64 finalizer; used to derive stream keys and seed xoshiro state.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256** generator keyed by (seed, stream, substream).
///
/// The key is hashed through SplitMix64, so the draws for one
/// (seed, trial, pattern) triple never depend on which other streams were
/// used before it or on which thread runs it.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Poisson variate with the given mean.
///
/// mean == 0 returns 0; mean < 30 uses inversion by sequential search of the
/// CDF; larger means use Hormann's PTRS transformed rejection.
std::uint64_t poisson(Stream& rng, double mean);

}  // namespace sibucket
