#pragma once

#include <cmath>
#include <cstdint>

namespace gmis {

// Minimal PCG32 generator (O'Neill, pcg-random.org): 64-bit LCG state with
// an xorshift/rotate output function and a per-instance stream selector.
// Two generators with the same seed but different streams produce
// uncorrelated, never-overlapping sequences.
class Pcg32 {
 public:
  Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
  Pcg32(std::uint64_t seed, std::uint64_t stream) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

// Stream ids, one per randomness role. A run derives every generator from
// (root seed, role id), so adding draws to one role never shifts another.
namespace rng_stream {
inline constexpr std::uint64_t kTruth = 1;          // truth-field coefficients
inline constexpr std::uint64_t kNoise = 2;          // observation noise
inline constexpr std::uint64_t kProposalDraws = 3;  // proposal draws + chain init
inline constexpr std::uint64_t kAcceptCoins = 4;    // accept/reject uniforms
inline constexpr std::uint64_t kKmeans = 5;         // clustering restarts
}  // namespace rng_stream

// Double-precision sampling wrapper. Normals use Box-Muller without a
// cached spare, so every normal consumes exactly two uniforms and the
// stream position is a fixed function of the draw count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(seed, stream) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_.next_u64() >> 11) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Index uniform on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_.next_u64()) * n) >> 64);
  }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  Pcg32 gen_;
};

}  // namespace gmis
