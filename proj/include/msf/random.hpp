#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace msf {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
constexpr std::uint64_t seed_part(std::uint64_t v) { return v; }
constexpr std::uint64_t seed_part(std::int64_t v) { return static_cast<std::uint64_t>(v); }
constexpr std::uint64_t seed_part(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }
constexpr std::uint64_t seed_part(std::string_view v) { return fnv1a(v); }
constexpr std::uint64_t seed_part(const char* v) { return fnv1a(v); }
}  // namespace detail

/// Stable seed derived from a base seed and a task path. Independent of scheduling.
template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t base, const Parts&... parts) {
  std::uint64_t h = mix64(base);
  ((h = mix64(h ^ detail::seed_part(parts))), ...);
  return h;
}

/// Uniform double in [0, 1) built from the top 53 bits; identical on every platform.
inline double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

/// Uniform integer in [0, n) by rejection; portable unlike std::uniform_int_distribution.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace msf
