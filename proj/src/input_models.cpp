#include "skboot/input_models.hpp"

#include "skboot/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace skboot {

std::string_view to_string(Family f) noexcept {
    return f == Family::Gamma ? "gamma" : "bernoulli";
}

Family family_from_string(std::string_view name) {
    if (name == "gamma") return Family::Gamma;
    if (name == "bernoulli") return Family::Bernoulli;
    throw Error(ErrorCode::InvalidArgument, "unknown distribution family '" + std::string(name) + "'");
}

InputDistribution InputDistribution::gamma(double shape, double scale) {
    SKBOOT_REQUIRE(std::isfinite(shape) && shape > 0.0, ErrorCode::InvalidArgument, "gamma shape must be > 0");
    SKBOOT_REQUIRE(std::isfinite(scale) && scale > 0.0, ErrorCode::InvalidArgument, "gamma scale must be > 0");
    return {Family::Gamma, shape, scale};
}

InputDistribution InputDistribution::bernoulli(double p) {
    SKBOOT_REQUIRE(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "bernoulli p must lie in [0,1]");
    return {Family::Bernoulli, p, 0.0};
}

double InputDistribution::mean() const noexcept {
    return family_ == Family::Gamma ? a_ * b_ : a_;
}

double InputDistribution::stddev() const noexcept {
    return family_ == Family::Gamma ? std::sqrt(a_) * b_ : std::sqrt(a_ * (1.0 - a_));
}

MomentBlock moments_of(const InputDistribution& model) {
    if (model.family() == Family::Gamma) return {model.mean(), model.stddev()};
    return {model.probability()};
}

InputDistribution params_from_moments(Family family, std::span<const double> block) {
    SKBOOT_REQUIRE(block.size() == moment_count(family), ErrorCode::LayoutMismatch,
                   "moment block size does not match family");
    if (family == Family::Gamma) {
        const double mean = block[0];
        const double sd = block[1];
        SKBOOT_REQUIRE(std::isfinite(mean) && mean > 0.0, ErrorCode::InvalidMoment, "gamma mean must be > 0");
        SKBOOT_REQUIRE(std::isfinite(sd) && sd > 0.0, ErrorCode::InvalidMoment, "gamma sd must be > 0");
        const double cv = mean / sd;
        return InputDistribution::gamma(cv * cv, sd * sd / mean);
    }
    const double p = block[0];
    SKBOOT_REQUIRE(p >= 0.0 && p <= 1.0, ErrorCode::InvalidMoment, "bernoulli mean must lie in [0,1]");
    return InputDistribution::bernoulli(p);
}

MomentLayout::MomentLayout(std::vector<Family> families) : families_(std::move(families)) {
    offsets_.reserve(families_.size());
    for (auto f : families_) {
        offsets_.push_back(dim_);
        dim_ += moment_count(f);
    }
}

MomentVector stack(const MomentLayout& layout, const std::vector<MomentBlock>& blocks) {
    SKBOOT_REQUIRE(blocks.size() == layout.processes(), ErrorCode::LayoutMismatch,
                   "block count does not match layout");
    MomentVector x(static_cast<Eigen::Index>(layout.dim()));
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        SKBOOT_REQUIRE(blocks[l].size() == layout.block_size(l), ErrorCode::LayoutMismatch,
                       "block " + std::to_string(l) + " has the wrong size");
        for (std::size_t j = 0; j < blocks[l].size(); ++j)
            x[static_cast<Eigen::Index>(layout.offset(l) + j)] = blocks[l][j];
    }
    return x;
}

std::vector<MomentBlock> unstack(const MomentLayout& layout, const MomentVector& x) {
    SKBOOT_REQUIRE(static_cast<std::size_t>(x.size()) == layout.dim(), ErrorCode::LayoutMismatch,
                   "moment vector dimension does not match layout");
    std::vector<MomentBlock> blocks(layout.processes());
    for (std::size_t l = 0; l < layout.processes(); ++l) {
        const auto off = static_cast<Eigen::Index>(layout.offset(l));
        blocks[l].assign(x.data() + off, x.data() + off + static_cast<Eigen::Index>(layout.block_size(l)));
    }
    return blocks;
}

bool is_valid_design_moment(const MomentLayout& layout, const MomentVector& x) {
    if (static_cast<std::size_t>(x.size()) != layout.dim()) return false;
    for (std::size_t l = 0; l < layout.processes(); ++l) {
        const auto off = static_cast<Eigen::Index>(layout.offset(l));
        if (layout.family(l) == Family::Gamma) {
            const double mean = x[off];
            const double sd = x[off + 1];
            if (!(mean > 0.0) || !(sd >= kMinRelativeStddev * mean) || !std::isfinite(sd)) return false;
        } else {
            const double p = x[off];
            if (!(p > 0.0 && p < 1.0)) return false;
        }
    }
    return true;
}

MomentLayout InputModelSet::layout() const {
    std::vector<Family> fams;
    fams.reserve(models.size());
    for (const auto& m : models) fams.push_back(m.family());
    return MomentLayout(std::move(fams));
}

MomentVector InputModelSet::moments() const {
    std::vector<MomentBlock> blocks;
    blocks.reserve(models.size());
    for (const auto& m : models) blocks.push_back(moments_of(m));
    return stack(layout(), blocks);
}

std::size_t InputModelSet::index_of(std::string_view label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    SKBOOT_REQUIRE(it != labels.end(), ErrorCode::InvalidArgument,
                   "no input process labelled '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

InputModelSet InputModelSet::from_moments(const MomentLayout& layout, const std::vector<std::string>& labels,
                                          const MomentVector& x) {
    SKBOOT_REQUIRE(labels.empty() || labels.size() == layout.processes(), ErrorCode::LayoutMismatch,
                   "label count does not match layout");
    const auto blocks = unstack(layout, x);
    InputModelSet set;
    set.labels = labels;
    set.models.reserve(blocks.size());
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        MomentBlock b = blocks[l];
        if (layout.family(l) == Family::Gamma) {
            b[1] = std::max(b[1], kMinRelativeStddev * b[0]);
        } else {
            b[0] = std::clamp(b[0], kBernoulliClamp, 1.0 - kBernoulliClamp);
        }
        set.models.push_back(params_from_moments(layout.family(l), b));
    }
    return set;
}

std::vector<std::size_t> RealWorldDataset::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.size());
    return out;
}

double draw(const InputDistribution& model, Rng& rng) {
    if (model.family() == Family::Gamma) {
        std::gamma_distribution<double> g(model.shape(), model.scale());
        return g(rng);
    }
    std::bernoulli_distribution b(model.probability());
    return b(rng) ? 1.0 : 0.0;
}

RealWorldDataset sample_dataset(const InputModelSet& models, std::span<const std::size_t> sizes, Rng& rng) {
    SKBOOT_REQUIRE(sizes.size() == models.size(), ErrorCode::LayoutMismatch,
                   "one sample size per input process is required");
    RealWorldDataset data;
    data.samples.resize(models.size());
    for (std::size_t l = 0; l < models.size(); ++l) {
        SKBOOT_REQUIRE(sizes[l] >= 2, ErrorCode::InvalidArgument, "each sample size must be >= 2");
        const auto& model = models.models[l];
        auto& out = data.samples[l];
        out.resize(sizes[l]);
        if (model.family() == Family::Gamma) {
            std::gamma_distribution<double> g(model.shape(), model.scale());
            for (auto& v : out) v = g(rng);
        } else {
            std::bernoulli_distribution b(model.probability());
            for (auto& v : out) v = b(rng) ? 1.0 : 0.0;
        }
    }
    return data;
}

EmpiricalMoments empirical_moments(std::span<const double> sample, Family family) {
    SKBOOT_REQUIRE(sample.size() >= 2, ErrorCode::InvalidArgument, "sample must have at least two observations");
    const double m = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= m;
    if (family == Family::Bernoulli) return {{mean}, false};
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / m);
    return {{mean, sd}, !(sd > 0.0)};
}

}  // namespace skboot
