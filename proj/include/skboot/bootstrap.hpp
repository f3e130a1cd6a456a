#pragma once

// Nonparametric bootstrap of the real-world input data.

#include "skboot/input_models.hpp"
#include "skboot/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace skboot {

/// Draws len(data) values uniformly with replacement.
std::vector<double> resample_process(std::span<const double> data, Rng& rng);

struct BootstrapDraw {
    MomentVector x;
    bool degenerate = false;
};

/// One bootstrap moment vector. Processes are resampled in order, each from its
/// own stream derived from a single 64-bit draw of `rng`.
BootstrapDraw bootstrap_moment_vector(const RealWorldDataset& data, const MomentLayout& layout, Rng& rng);

/// Maximum attempts before a degenerate resample is surfaced as an error.
inline constexpr int kMaxDegenerateRedraws = 100;

/// Like bootstrap_moment_vector, but re-draws degenerate resamples. Throws
/// DegenerateSample after kMaxDegenerateRedraws failed attempts.
MomentVector draw_bootstrap_moments(const RealWorldDataset& data, const MomentLayout& layout, Rng& rng);

struct BootstrapMoments {
    std::vector<MomentVector> vectors;
    std::uint64_t seed = 0;
    [[nodiscard]] std::size_t size() const noexcept { return vectors.size(); }
};

/// B independent bootstrap moment vectors; vector b uses stream derive_seed(seed, b).
BootstrapMoments generate(const RealWorldDataset& data, const MomentLayout& layout, std::size_t B,
                          std::uint64_t seed);

void check_dataset(const RealWorldDataset& data, const MomentLayout& layout);

}  // namespace skboot
