#pragma once

#include <array>
#include <cstdint>

namespace page {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Named substreams derived from a single run seed.
enum class Stream : std::uint32_t {
  kBranchCoin = 1,
  kBatch = 2,
  kBatchPrime = 3,
  kOutput = 4,
  kProblem = 5,
  kEstimate = 6,
  kMonteCarlo = 7,
};

/// Counter-based generator: output block k of stream s under seed is
/// philox(ctr = {k_lo, k_hi, s_lo, s_hi}, key = seed). Streams never overlap,
/// and any draw can be reproduced from (seed, stream, position) alone.
class CounterRng {
 public:
  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  CounterRng(std::uint64_t seed, Stream stream)
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();
  /// Uniform integer in [0, n); unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t next_index(std::uint64_t n);
  /// Consumes exactly one draw regardless of p, so streams stay aligned.
  bool bernoulli(double p);
  /// Standard normal via Box-Muller; consumes two draws.
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const { return position_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
};

/// Derives a stream id for Monte-Carlo substreams: (tag, index) -> id.
constexpr std::uint64_t substream(Stream tag, std::uint64_t index) {
  return (static_cast<std::uint64_t>(tag) << 48) ^ (index & 0x0000FFFFFFFFFFFFULL);
}

/// SplitMix64 finalizer; used to decorrelate user-provided seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace page
