#pragma once

// Data-adaptive experiment design: an ellipsoid fitted to bootstrap moment
// vectors, accepted by an exact binomial coverage test, and filled with a
// Latin-hypercube-based uniform design.

#include "skboot/input_models.hpp"
#include "skboot/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace skboot {

struct RealWorldDataset;

/// {x : (x - center)' shape^{-1} (x - center) <= threshold}
class Ellipsoid {
public:
    /// Throws SingularCovariance unless shape is numerically positive definite.
    Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape, double threshold);

    [[nodiscard]] const Eigen::VectorXd& center() const noexcept { return center_; }
    [[nodiscard]] const Eigen::MatrixXd& shape() const noexcept { return shape_; }
    [[nodiscard]] double threshold() const noexcept { return threshold_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(center_.size()); }
    /// Lower-triangular L with shape = L L'.
    [[nodiscard]] Eigen::MatrixXd cholesky_lower() const { return llt_.matrixL(); }

    [[nodiscard]] double mahalanobis2(const Eigen::VectorXd& x) const;
    [[nodiscard]] bool contains(const Eigen::VectorXd& x) const { return mahalanobis2(x) <= threshold_; }

private:
    Eigen::VectorXd center_;
    Eigen::MatrixXd shape_;
    double threshold_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Center and shape are the sample mean and covariance of the points; the
/// threshold is the ceil(q*n)-th smallest squared Mahalanobis distance.
Ellipsoid fit_ellipsoid(std::span<const MomentVector> points, double q);

/// P{X <= c} for X ~ Binomial(n, p); 0 for c < 0.
double binomial_cdf(long c, long n, double p);

struct TestSizing {
    long B1 = 0;
    long c = 0;  // accept the ellipsoid when more than c of B1 draws fall inside
    double alpha_I = 0.0;
    double power = 0.0;
    double p0 = 0.0;
    double p1 = 0.0;
};

/// Smallest B1 (with its largest feasible c) such that
/// P{X <= c | B1, p0} <= alpha_I and P{X <= c | B1, p1} >= power.
TestSizing size_binomial_test(double alpha_I, double power, double p0, double p1);

struct DesignSpaceOptions {
    double q = 0.99;
    double alpha_I = 0.005;
    double power = 0.95;
    double p1 = 0.97;
    std::size_t B0 = 0;  // 0 selects max(1000, 20 d)
    int max_iters = 50;
};

std::size_t default_initial_resamples(std::size_t d) noexcept;

struct DesignSpace {
    Ellipsoid ellipsoid;
    TestSizing sizing;
    int iterations = 0;          // number of coverage tests performed
    std::size_t resamples = 0;   // total bootstrap vectors drawn
    long last_inside = 0;        // inside count of the accepting test
};

using MomentSampler = std::function<MomentVector(Rng&)>;

/// True when more than sizing.c of the draws fall inside the ellipsoid.
bool coverage_test_accepts(const Ellipsoid& e, std::span<const MomentVector> draws, const TestSizing& sizing);

/// Fit / test / merge loop. Throws NoConvergence after max_iters tests.
DesignSpace validate_design_space(const MomentSampler& sampler, std::size_t d, const DesignSpaceOptions& opts,
                                  Rng& rng);
DesignSpace validate_design_space(const RealWorldDataset& data, const MomentLayout& layout,
                                  const DesignSpaceOptions& opts, Rng& rng);

/// k x d Latin hypercube sample on (0,1)^d, one point per row.
Eigen::MatrixXd latin_hypercube(std::size_t k, std::size_t d, Rng& rng);

/// Maps a point of (0,1)^d to the closed unit d-ball through the inverse
/// marginal CDFs of the polar representation of a uniform ball point
/// (radius, then d-2 polar angles on [0, pi], then one azimuth on [0, 2 pi)).
/// The map sends uniform inputs to uniform outputs.
Eigen::VectorXd unit_ball_point(std::span<const double> u);

std::vector<MomentVector> sample_in_ellipsoid(const Ellipsoid& e, std::size_t k, Rng& rng);

struct ExperimentDesign {
    std::vector<MomentVector> points;
    int reps = 0;
    DesignSpace space;
    std::size_t candidates = 0;  // candidate points generated
    std::size_t rejected = 0;    // candidates violating moment validity
};

/// Candidates outside the moment validity box are replaced by rows of fresh
/// Latin hypercube samples. Throws ValidityStarvation when more than 90% of
/// candidates are invalid.
std::vector<MomentVector> fill_design(const Ellipsoid& e, const MomentLayout& layout, std::size_t k, Rng& rng,
                                      std::size_t* candidates = nullptr, std::size_t* rejected = nullptr);

ExperimentDesign build_design(const RealWorldDataset& data, const MomentLayout& layout,
                              const DesignSpaceOptions& opts, std::size_t k, std::size_t N, Rng& rng);

}  // namespace skboot
