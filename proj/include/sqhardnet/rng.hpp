#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sqhardnet {

/// Engine used for every random draw in the library.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used to turn stream labels into integers.
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/**
 * Stream derivation.
 *
 * A child seed is mix64(parent ^ mix64(index)). Every random consumer in the
 * library derives its seed from the caller-supplied seed through a fixed
 * chain of these steps, e.g.
 *
 *   master -> "train" -> trial index -> chunk index
 *
 * so results never depend on thread count or scheduling.
 */
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::string_view label) noexcept {
  return derive_seed(parent, hash_label(label));
}

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::string_view label,
                                    Rest... rest) noexcept {
  return derive_seed(derive_seed(parent, label), rest...);
}

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index,
                                    std::uint64_t next,
                                    Rest... rest) noexcept {
  return derive_seed(derive_seed(parent, index), next, rest...);
}

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

}  // namespace sqhardnet
