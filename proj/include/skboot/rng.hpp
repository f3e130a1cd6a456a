#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace skboot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to turn structured (base, tag, index) tuples
/// into well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(base);
    for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
    return derive_seed(base, {tag});
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Stream tags used across modules so that design, simulation and evaluation
// draws never share a stream.
namespace stream {
inline constexpr std::uint64_t kData = 0x11;
inline constexpr std::uint64_t kDesign = 0x22;
inline constexpr std::uint64_t kSimulation = 0x33;
inline constexpr std::uint64_t kBootstrap = 0x44;
inline constexpr std::uint64_t kSimulationAlt = 0x55;
inline constexpr std::uint64_t kFit = 0x66;
}  // namespace stream

}  // namespace skboot
