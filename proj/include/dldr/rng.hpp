#pragma once

#include <cstdint>

namespace dldr {

// Default seed used by the CLI and diagnostics when none is given.
inline constexpr std::uint64_t kDefaultSeed = 424242;

// SplitMix64 finalizer. Part of the output reproducibility contract:
// every random number this library produces is derived from it, and the
// function must never change.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Map a 64-bit word to the open interval (0,1). The half-ulp offset keeps
// both endpoints unreachable, so quantile functions can consume the value
// without clamping.
constexpr double to_unit(std::uint64_t z) noexcept {
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based substream for Monte Carlo work. The k-th uniform of the
// substream addressed by (seed, draw, param) is
//
//   to_unit(mix64(mix64(mix64(mix64(seed) ^ draw) ^ param) + k))
//
// Streams are independent of evaluation order and worker count, which is
// what makes parallel propagation runs bit-reproducible.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t draw, std::uint64_t param) noexcept
      : base_(mix64(mix64(mix64(seed) ^ draw) ^ param)) {}

  double next() noexcept { return to_unit(mix64(base_ + counter_++)); }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// Plain sequential stream for consumers that just need a reproducible
// uniform source (tests, one-off sampling).
class SequentialRng {
 public:
  explicit SequentialRng(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

  double next() noexcept { return to_unit(mix64(state_ + counter_++)); }

 private:
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
};

}  // namespace dldr
