#include "skboot/aci.hpp"

#include "skboot/bootstrap.hpp"
#include "skboot/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace skboot {

std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha) {
    // The small offset keeps products like 40 * 0.025 from rounding up a rank.
    const double b = static_cast<double>(B);
    const auto lo = static_cast<std::size_t>(std::ceil(b * alpha / 2.0 - 1e-9));
    const auto hi = static_cast<std::size_t>(std::ceil(b * (1.0 - alpha / 2.0) - 1e-9));
    return {std::clamp<std::size_t>(lo, 1, B), std::clamp<std::size_t>(hi, 1, B)};
}

Interval percentile_interval(std::span<const double> values, double alpha) {
    SKBOOT_REQUIRE(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    const auto needed = static_cast<std::size_t>(std::ceil(2.0 / alpha - 1e-9));
    SKBOOT_REQUIRE(values.size() >= needed, ErrorCode::InsufficientB,
                   "need at least " + std::to_string(needed) + " bootstrap values for alpha = " + std::to_string(alpha));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto [lo, hi] = percentile_ranks(sorted.size(), alpha);
    return {sorted[lo - 1], sorted[hi - 1]};
}

VarianceComponents variance_components(std::span<const double> mu, std::span<const double> sigma2,
                                       std::span<const double> draws) {
    const std::size_t B = mu.size();
    SKBOOT_REQUIRE(B >= 2 && sigma2.size() == B && draws.size() == B, ErrorCode::InvalidArgument,
                   "variance components need B >= 2 values of each kind");
    // Shifted by the first value so constant inputs give exactly zero.
    auto sample_var = [](std::span<const double> v) {
        const double shift = v.front();
        double mean = 0.0;
        for (double x : v) mean += x - shift;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - shift - mean) * (x - shift - mean);
        return ss / static_cast<double>(v.size() - 1);
    };
    VarianceComponents out;
    out.total = sample_var(draws);
    out.input = sample_var(mu);
    double sum = 0.0;
    for (double s : sigma2) {
        SKBOOT_REQUIRE(s >= 0.0, ErrorCode::InvalidArgument, "prediction variances must be non-negative");
        sum += s;
    }
    out.metamodel = sum / static_cast<double>(B);
    out.ratio = out.total > 0.0 ? std::sqrt(out.input) / std::sqrt(out.total) : 0.0;
    return out;
}

void UQConfig::validate() const {
    SKBOOT_REQUIRE(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    SKBOOT_REQUIRE(static_cast<double>(B) >= std::ceil(2.0 / alpha - 1e-9), ErrorCode::InsufficientB,
                   "B must be at least ceil(2 / alpha)");
    SKBOOT_REQUIRE(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
    SKBOOT_REQUIRE(N >= 2 * k, ErrorCode::InvalidArgument, "budget N must be >= 2 k");
    SKBOOT_REQUIRE(design.q > 0.0 && design.q < 1.0, ErrorCode::InvalidArgument, "q must lie in (0,1)");
}

BootstrapEvaluation evaluate_bootstrap(const Metamodel& metamodel, const RealWorldDataset& data,
                                       const MomentLayout& layout, std::size_t B, std::uint64_t seed,
                                       const MomentPredicate& defined, const MomentPredicate& unstable) {
    SKBOOT_REQUIRE(B >= 1, ErrorCode::InvalidArgument, "B must be >= 1");
    check_dataset(data, layout);
    BootstrapEvaluation out;
    out.mu.reserve(B);
    out.sigma2.reserve(B);
    out.draws.reserve(B);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, b));
        MomentVector x;
        std::size_t consecutive = 0;
        while (true) {
            x = draw_bootstrap_moments(data, layout, rng);
            if (!defined || defined(x)) break;
            ++out.rejected_undefined;
            if (++consecutive > kMaxConsecutiveRejections)
                throw Error(ErrorCode::UndefinedStarvation,
                            "more than " + std::to_string(kMaxConsecutiveRejections) +
                                " consecutive bootstrap moments imply an undefined system");
        }
        if (unstable && unstable(x)) ++out.unstable;
        const Prediction p = metamodel(x);
        out.mu.push_back(p.mean);
        out.sigma2.push_back(p.variance);
        out.draws.push_back(p.mean + std::sqrt(p.variance) * normal(rng));
    }
    return out;
}

UQResult summarize(BootstrapEvaluation evaluation, double alpha) {
    UQResult r;
    r.ci0 = percentile_interval(evaluation.mu, alpha);
    r.ci_plus = percentile_interval(evaluation.draws, alpha);
    r.components = variance_components(evaluation.mu, evaluation.sigma2, evaluation.draws);
    r.unstable_fraction = evaluation.unstable_fraction();
    r.rejected_undefined = evaluation.rejected_undefined;
    r.detail = std::move(evaluation);
    return r;
}

ExperimentDesign design_stage(const RealWorldDataset& data, const MomentLayout& layout, const UQConfig& config) {
    Rng rng(derive_seed(config.seed, stream::kDesign));
    return build_design(data, layout, config.design, config.k, config.N, rng);
}

std::vector<PointSummary> simulate_design(const ExperimentDesign& design, const MomentLayout& layout,
                                          const NetworkTopology& topology, const SimProtocol& protocol,
                                          std::uint64_t seed) {
    std::vector<PointSummary> out;
    out.reserve(design.points.size());
    for (std::size_t i = 0; i < design.points.size(); ++i) {
        const auto models = InputModelSet::from_moments(layout, {}, design.points[i]);
        Rng rng(derive_seed(seed, i));
        out.push_back(replicate(topology, models, protocol, design.reps, rng));
    }
    return out;
}

BootstrapEvaluation evaluate_network_bootstrap(const SKModel& model, const RealWorldDataset& data,
                                               const MomentLayout& layout, const NetworkTopology& topology,
                                               const UQConfig& config) {
    const Metamodel metamodel = [&model](const MomentVector& x) { return model.predict(x); };
    MomentPredicate defined;
    if (config.reject_undefined)
        defined = [&](const MomentVector& x) { return is_defined(topology, layout, x); };
    // Without rejection an undefined vector cannot be classified; it is counted as unstable.
    const MomentPredicate unstable = [&](const MomentVector& x) {
        return !is_defined(topology, layout, x) || is_unstable(topology, layout, x);
    };
    return evaluate_bootstrap(metamodel, data, layout, config.B, derive_seed(config.seed, stream::kBootstrap),
                              defined, unstable);
}

UQResult run_aci(const RealWorldDataset& data, const MomentLayout& layout, const NetworkTopology& topology,
                 const SimProtocol& protocol, const UQConfig& config) {
    config.validate();
    check_dataset(data, layout);
    validate(topology, layout);

    ExperimentDesign design = design_stage(data, layout, config);
    const auto summaries =
        simulate_design(design, layout, topology, protocol, derive_seed(config.seed, stream::kSimulation));

    SKFitOptions fit_opts = config.sk;
    fit_opts.seed = derive_seed(config.seed, stream::kFit);
    const SKModel model = SKModel::fit(make_sk_data(design.points, summaries), fit_opts);

    UQResult result = summarize(evaluate_network_bootstrap(model, data, layout, topology, config), config.alpha);
    result.hyper = model.hyper();
    result.fit = model.report();
    result.design_iterations = design.space.iterations;
    result.design_rejected = design.rejected;
    return result;
}

}  // namespace skboot
