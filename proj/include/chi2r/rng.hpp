#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace chi2r {

/// Philox4x32-10 block function (Salmon et al., Random123).
/// Maps a 128-bit counter and a 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream.
///
/// A stream is identified by (seed, stream_id); the seed is the Philox key
/// and the stream id occupies the upper half of the counter.  Distinct
/// stream ids therefore never overlap, and a stream can be recreated at any
/// time from its two identifiers, which is what makes Monte Carlo output
/// independent of how replicates are scheduled over threads.
///
/// Satisfies std::uniform_random_bit_generator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform double in (0, 1).
  double uniform_open() noexcept;

  /// Uniform integer in [0, bound) via Lemire's multiply-shift rejection.
  /// bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

}  // namespace chi2r
