#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace longric {

// FNV-1a, used for stable id-based fold assignment and stream seeding.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named, seeded RNG stream: independent of draw order in other streams.
inline std::mt19937_64 named_stream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(fnv1a(name, seed ^ 0xcbf29ce484222325ULL));
}

// Stable fold assignment by id hash; deterministic and order-independent.
inline int fold_of(const std::string& id, int folds, std::uint64_t seed,
                   std::string_view salt) {
  std::uint64_t h = fnv1a(id, fnv1a(salt, seed ^ 0xcbf29ce484222325ULL));
  return static_cast<int>(h % static_cast<std::uint64_t>(folds));
}

}  // namespace longric
