#pragma once

// Parametric input distributions and their moment characterization.
//
// Each input process is either gamma (characterized by mean and standard
// deviation) or Bernoulli (characterized by its mean). Stacking the per-process
// moment blocks gives the moment vector x that the metamodel is built over.

#include "skboot/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace skboot {

enum class Family { Gamma, Bernoulli };

std::string_view to_string(Family f) noexcept;
Family family_from_string(std::string_view name);

/// Number of moments that pin down a member of the family.
constexpr std::size_t moment_count(Family f) noexcept { return f == Family::Gamma ? 2 : 1; }

using MomentBlock = std::vector<double>;
using MomentVector = Eigen::VectorXd;

/// A gamma(shape, scale) or Bernoulli(p) law. Gamma uses the scale
/// parameterization: mean = shape * scale.
class InputDistribution {
public:
    static InputDistribution gamma(double shape, double scale);
    static InputDistribution bernoulli(double p);

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] double shape() const noexcept { return a_; }
    [[nodiscard]] double scale() const noexcept { return b_; }
    [[nodiscard]] double probability() const noexcept { return a_; }

    [[nodiscard]] double mean() const noexcept;
    [[nodiscard]] double stddev() const noexcept;

    bool operator==(const InputDistribution&) const = default;

private:
    InputDistribution(Family f, double a, double b) : family_(f), a_(a), b_(b) {}
    Family family_;
    double a_;
    double b_;
};

MomentBlock moments_of(const InputDistribution& model);

/// Method-of-moments inverse. Throws InvalidMoment outside the family's
/// moment domain.
InputDistribution params_from_moments(Family family, std::span<const double> block);

/// Index map from input processes to coordinates of the stacked moment vector.
class MomentLayout {
public:
    MomentLayout() = default;
    explicit MomentLayout(std::vector<Family> families);

    [[nodiscard]] std::size_t processes() const noexcept { return families_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] Family family(std::size_t l) const { return families_.at(l); }
    [[nodiscard]] std::size_t offset(std::size_t l) const { return offsets_.at(l); }
    [[nodiscard]] std::size_t block_size(std::size_t l) const { return moment_count(families_.at(l)); }
    [[nodiscard]] const std::vector<Family>& families() const noexcept { return families_; }

    bool operator==(const MomentLayout&) const = default;

private:
    std::vector<Family> families_;
    std::vector<std::size_t> offsets_;
    std::size_t dim_ = 0;
};

MomentVector stack(const MomentLayout& layout, const std::vector<MomentBlock>& blocks);
std::vector<MomentBlock> unstack(const MomentLayout& layout, const MomentVector& x);

/// Lower limit on a gamma block's standard deviation relative to its mean.
inline constexpr double kMinRelativeStddev = 1e-6;
/// Bernoulli means are clamped into [eps, 1 - eps] when used to drive a simulation.
inline constexpr double kBernoulliClamp = 1e-6;

/// True when every block lies strictly inside the domain usable as a design
/// point: gamma mean > 0 and sd >= 1e-6 * mean, Bernoulli mean in (0, 1).
bool is_valid_design_moment(const MomentLayout& layout, const MomentVector& x);

struct InputModelSet {
    std::vector<std::string> labels;
    std::vector<InputDistribution> models;

    [[nodiscard]] std::size_t size() const noexcept { return models.size(); }
    [[nodiscard]] MomentLayout layout() const;
    [[nodiscard]] MomentVector moments() const;
    /// Index of the process with the given label; throws InvalidArgument if absent.
    [[nodiscard]] std::size_t index_of(std::string_view label) const;

    /// Builds the simulation models implied by x. Gamma sd is raised to the
    /// validity floor and Bernoulli means are clamped away from {0, 1}.
    static InputModelSet from_moments(const MomentLayout& layout, const std::vector<std::string>& labels,
                                      const MomentVector& x);
};

struct RealWorldDataset {
    std::vector<std::vector<double>> samples;  // one vector per input process

    [[nodiscard]] std::size_t processes() const noexcept { return samples.size(); }
    [[nodiscard]] std::vector<std::size_t> sizes() const;
};

double draw(const InputDistribution& model, Rng& rng);

RealWorldDataset sample_dataset(const InputModelSet& models, std::span<const std::size_t> sizes, Rng& rng);

struct EmpiricalMoments {
    MomentBlock block;
    bool degenerate = false;  // zero standard deviation in a gamma block
};

/// Plug-in moments: mean, and for gamma blocks the standard deviation with divisor m.
EmpiricalMoments empirical_moments(std::span<const double> sample, Family family);

}  // namespace skboot
