#pragma once

// Metamodel-assisted bootstrap intervals: CI0 (input uncertainty only, from
// sorted metamodel predictions) and CI+ (input plus metamodel uncertainty,
// from sorted normal draws around the predictions), together with the
// variance decomposition sigma2_T = sigma2_I + sigma2_M.

#include "skboot/design.hpp"
#include "skboot/input_models.hpp"
#include "skboot/queueing.hpp"
#include "skboot/sk.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace skboot {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// 1-based order-statistic ranks (ceil(B alpha/2), ceil(B (1 - alpha/2))).
std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha);

/// Throws InsufficientB when B < ceil(2 / alpha).
Interval percentile_interval(std::span<const double> values, double alpha);

struct VarianceComponents {
    double total = 0.0;      // sample variance of the M_b
    double input = 0.0;      // sample variance of the mu_b
    double metamodel = 0.0;  // mean of sigma2_p at the bootstrap points
    double ratio = 0.0;      // sqrt(input / total); 0 when total == 0
};

VarianceComponents variance_components(std::span<const double> mu, std::span<const double> sigma2,
                                       std::span<const double> draws);

struct UQConfig {
    double alpha = 0.05;
    std::size_t B = 2000;
    std::size_t k = 40;
    std::size_t N = 2000;
    bool reject_undefined = true;
    DesignSpaceOptions design;
    SKFitOptions sk;
    std::uint64_t seed = 1;

    void validate() const;
};

using Metamodel = std::function<Prediction(const MomentVector&)>;
using MomentPredicate = std::function<bool(const MomentVector&)>;

inline constexpr std::size_t kMaxConsecutiveRejections = 10000;

struct BootstrapEvaluation {
    std::vector<double> mu;      // m_p at each bootstrap moment vector
    std::vector<double> sigma2;  // sigma2_p at each bootstrap moment vector
    std::vector<double> draws;   // M_b ~ N(mu_b, sigma2_b)
    std::size_t rejected_undefined = 0;
    std::size_t unstable = 0;
    [[nodiscard]] double unstable_fraction() const {
        return mu.empty() ? 0.0 : static_cast<double>(unstable) / static_cast<double>(mu.size());
    }
};

/// Draws B bootstrap moment vectors (vector b from stream derive_seed(seed, b)),
/// re-drawing any for which `defined` is false, and evaluates the metamodel at
/// each. `unstable` only feeds the diagnostic count. Throws UndefinedStarvation
/// after kMaxConsecutiveRejections consecutive rejections.
BootstrapEvaluation evaluate_bootstrap(const Metamodel& metamodel, const RealWorldDataset& data,
                                       const MomentLayout& layout, std::size_t B, std::uint64_t seed,
                                       const MomentPredicate& defined = {}, const MomentPredicate& unstable = {});

struct UQResult {
    Interval ci0;
    Interval ci_plus;
    VarianceComponents components;
    double unstable_fraction = 0.0;
    std::size_t rejected_undefined = 0;
    SKHyper hyper;
    SKFitReport fit;
    int design_iterations = 0;
    std::size_t design_rejected = 0;
    BootstrapEvaluation detail;
};

UQResult summarize(BootstrapEvaluation evaluation, double alpha);

struct SimulatedDesign {
    ExperimentDesign design;
    std::vector<PointSummary> summaries;
};

ExperimentDesign design_stage(const RealWorldDataset& data, const MomentLayout& layout, const UQConfig& config);

/// n = design.reps replications at every design point; point i uses stream
/// derive_seed(seed, i).
std::vector<PointSummary> simulate_design(const ExperimentDesign& design, const MomentLayout& layout,
                                          const NetworkTopology& topology, const SimProtocol& protocol,
                                          std::uint64_t seed);

/// Full procedure: design, simulation, SK fit, bootstrap evaluation, intervals.
UQResult run_aci(const RealWorldDataset& data, const MomentLayout& layout, const NetworkTopology& topology,
                 const SimProtocol& protocol, const UQConfig& config);

/// Bootstrap evaluation of a fitted model with the network's defined/unstable
/// classifiers attached.
BootstrapEvaluation evaluate_network_bootstrap(const SKModel& model, const RealWorldDataset& data,
                                               const MomentLayout& layout, const NetworkTopology& topology,
                                               const UQConfig& config);

}  // namespace skboot
