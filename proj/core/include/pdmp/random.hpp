#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pdmp {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

/// Purpose tags mixed into stream ids so that distinct stages never share
/// random numbers by accident.
enum class StreamPurpose : std::uint64_t {
  Simulate = 1,
  Calibration = 2,  // also used for CLVQ training and the frozen pass
  Census = 3,
  Baseline = 4,
  Policy = 5,
  Test = 99,
};

/// A reproducible random stream. The 64-bit seed is the Philox key, the
/// stream id occupies the upper half of the 128-bit counter and the lower
/// half counts blocks. Streams with different ids never overlap, so the
/// draw sequence of trajectory i depends only on (seed, purpose, i) and not
/// on which thread simulated it.
///
/// Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() noexcept : RandomStream(0, 0) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  /// Stream for the index-th item of a campaign with the given purpose.
  static RandomStream for_item(std::uint64_t seed, StreamPurpose purpose,
                               std::uint64_t index) noexcept;

  /// Child stream; the parent is left untouched.
  [[nodiscard]] RandomStream split(std::uint64_t tag) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Exponential with the given rate (rate > 0).
  double exponential(double rate) noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  unsigned pos_ = 4;
};

/// SplitMix64 finalizer; used to derive stream ids and sampling keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace pdmp
