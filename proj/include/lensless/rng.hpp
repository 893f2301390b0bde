#pragma once

// Seed derivation. Every random stream in the toolkit is an mt19937_64 whose
// seed is a splitmix64 mix of a caller seed and a salt (a spec hash, a named
// substream, or a sample index), so results never depend on call order.

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

namespace lensless {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return splitmix64(splitmix64(seed) ^ (salt + 0x632be59bd9b4e019ULL));
}

/// FNV-1a, used to turn substream names into salts.
[[nodiscard]] constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Incremental hash over the fields of a spec.
class SpecHasher {
 public:
  SpecHasher& add(std::uint64_t v) noexcept {
    state_ = splitmix64(state_ ^ v);
    return *this;
  }
  SpecHasher& add(double v) noexcept { return add(std::bit_cast<std::uint64_t>(v)); }
  SpecHasher& add(std::string_view s) noexcept { return add(hash_name(s)); }

  [[nodiscard]] std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0x243f6a8885a308d3ULL;
};

/// Seed of a named substream ("psf", "object", "noise", "trials") of a master seed.
[[nodiscard]] constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view name) noexcept {
  return mix_seed(master, hash_name(name));
}

[[nodiscard]] inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t salt = 0) {
  return std::mt19937_64(mix_seed(seed, salt));
}

}  // namespace lensless
