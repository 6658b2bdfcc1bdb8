#pragma once

#include <cstdint>
#include <initializer_list>

namespace tiescan {

inline constexpr const char* kVersion = "0.1.0";

// SplitMix64 finalizer. Cheap, full-avalanche; good enough to key
// independent engine streams off small structured inputs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Splittable sub-stream seed: fold a path of integers (stream tag, column,
// trial, ...) into a base seed. Deliberately independent of any surrounding
// loop structure so that one (seed, path) pair always names the same stream.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base);
    for (std::uint64_t v : path) h = mix64(h ^ v);
    return h;
}

// Stream tags for derive_seed paths.
namespace stream {
inline constexpr std::uint64_t design = 0xD0551ull;
inline constexpr std::uint64_t column = 0xC0157ull;
inline constexpr std::uint64_t signal = 0x516AAull;
inline constexpr std::uint64_t noise  = 0x90153ull;
} // namespace stream

} // namespace tiescan
