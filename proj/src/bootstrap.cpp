#include "skboot/bootstrap.hpp"

#include "skboot/error.hpp"

#include <cmath>

namespace skboot {

std::vector<double> resample_process(std::span<const double> data, Rng& rng) {
    SKBOOT_REQUIRE(!data.empty(), ErrorCode::InvalidArgument, "cannot resample an empty sample");
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::vector<double> out(data.size());
    for (auto& v : out) v = data[pick(rng)];
    return out;
}

void check_dataset(const RealWorldDataset& data, const MomentLayout& layout) {
    SKBOOT_REQUIRE(data.processes() == layout.processes(), ErrorCode::LayoutMismatch,
                   "dataset process count does not match layout");
    for (std::size_t l = 0; l < data.processes(); ++l) {
        SKBOOT_REQUIRE(data.samples[l].size() >= 2, ErrorCode::InvalidArgument,
                       "process " + std::to_string(l) + " has fewer than two observations");
        const bool bernoulli = layout.family(l) == Family::Bernoulli;
        for (double v : data.samples[l]) {
            const bool ok = bernoulli ? (v == 0.0 || v == 1.0) : (std::isfinite(v) && v >= 0.0);
            SKBOOT_REQUIRE(ok, ErrorCode::InvalidArgument,
                           "process " + std::to_string(l) + " has an observation outside its family's support");
        }
    }
}

BootstrapDraw bootstrap_moment_vector(const RealWorldDataset& data, const MomentLayout& layout, Rng& rng) {
    SKBOOT_REQUIRE(data.processes() == layout.processes(), ErrorCode::LayoutMismatch,
                   "dataset process count does not match layout");
    const std::uint64_t base = rng();
    BootstrapDraw out{MomentVector(static_cast<Eigen::Index>(layout.dim())), false};
    for (std::size_t l = 0; l < layout.processes(); ++l) {
        const auto& sample = data.samples[l];
        Rng stream(derive_seed(base, l));
        std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
        const double m = static_cast<double>(sample.size());
        const auto off = static_cast<Eigen::Index>(layout.offset(l));
        // Resampled values are accumulated directly rather than materialized.
        if (layout.family(l) == Family::Gamma) {
            // Shifted sums keep the one-pass variance free of cancellation.
            const double shift = sample.front();
            double sum = 0.0;
            double sumsq = 0.0;
            for (std::size_t i = 0; i < sample.size(); ++i) {
                const double v = sample[pick(stream)] - shift;
                sum += v;
                sumsq += v * v;
            }
            const double centered = sum / m;
            const double mean = shift + centered;
            double sd = std::sqrt(std::max(0.0, sumsq / m - centered * centered));
            if (sd <= 1e-13 * std::abs(mean)) sd = 0.0;
            out.x[off] = mean;
            out.x[off + 1] = sd;
            if (!(sd > 0.0)) out.degenerate = true;
        } else {
            double sum = 0.0;
            for (std::size_t i = 0; i < sample.size(); ++i) sum += sample[pick(stream)];
            out.x[off] = sum / m;
        }
    }
    return out;
}

MomentVector draw_bootstrap_moments(const RealWorldDataset& data, const MomentLayout& layout, Rng& rng) {
    for (int attempt = 0; attempt < kMaxDegenerateRedraws; ++attempt) {
        auto d = bootstrap_moment_vector(data, layout, rng);
        if (!d.degenerate) return std::move(d.x);
    }
    throw Error(ErrorCode::DegenerateSample, "bootstrap resample had zero standard deviation in a gamma block after " +
                                                 std::to_string(kMaxDegenerateRedraws) + " attempts");
}

BootstrapMoments generate(const RealWorldDataset& data, const MomentLayout& layout, std::size_t B,
                          std::uint64_t seed) {
    SKBOOT_REQUIRE(B >= 1, ErrorCode::InvalidArgument, "B must be >= 1");
    check_dataset(data, layout);
    BootstrapMoments out;
    out.seed = seed;
    out.vectors.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, b));
        out.vectors.push_back(draw_bootstrap_moments(data, layout, rng));
    }
    return out;
}

}  // namespace skboot
