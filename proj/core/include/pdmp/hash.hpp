#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string_view>

namespace pdmp {

/// Incremental 64-bit FNV-1a. Used to fingerprint parameters and artifacts;
/// not a cryptographic hash.
class Fnv1a {
 public:
  Fnv1a& bytes(std::span<const std::byte> data) noexcept {
    for (std::byte b : data) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001B3ull;
    }
    return *this;
  }
  Fnv1a& u64(std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xFFu;
      state_ *= 0x100000001B3ull;
    }
    return *this;
  }
  Fnv1a& f64(double v) noexcept { return u64(std::bit_cast<std::uint64_t>(v)); }
  Fnv1a& str(std::string_view s) noexcept {
    return bytes(std::as_bytes(std::span(s.data(), s.size())));
  }
  [[nodiscard]] std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ull;
};

}  // namespace pdmp
