#include "skboot/design.hpp"

#include "skboot/bootstrap.hpp"
#include "skboot/error.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <tuple>

namespace skboot {

namespace {

// Positive definiteness is judged on the correlation-scaled matrix so that
// coordinates with very different scales do not mask a rank deficiency.
bool numerically_pd(const Eigen::MatrixXd& shape) {
    const Eigen::Index d = shape.rows();
    Eigen::VectorXd diag = shape.diagonal();
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) return false;
    const Eigen::VectorXd inv_sd = diag.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd corr = inv_sd.asDiagonal() * shape * inv_sd.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd l = llt.matrixL();
    return l.diagonal().minCoeff() > 1e-6;
}

std::size_t rank_index(double q, std::size_t n) {
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(idx, 1, n);
}

}  // namespace

Ellipsoid::Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape, double threshold)
    : center_(std::move(center)), shape_(std::move(shape)), threshold_(threshold) {
    SKBOOT_REQUIRE(shape_.rows() == center_.size() && shape_.cols() == center_.size(), ErrorCode::InvalidArgument,
                   "ellipsoid shape must be d x d");
    SKBOOT_REQUIRE(threshold_ > 0.0 && std::isfinite(threshold_), ErrorCode::InvalidArgument,
                   "ellipsoid threshold must be positive");
    SKBOOT_REQUIRE(numerically_pd(shape_), ErrorCode::SingularCovariance,
                   "ellipsoid shape is not positive definite (insufficient resamples or collinear moments)");
    llt_.compute(shape_);
}

double Ellipsoid::mahalanobis2(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = llt_.matrixL().solve(x - center_);
    return z.squaredNorm();
}

Ellipsoid fit_ellipsoid(std::span<const MomentVector> points, double q) {
    SKBOOT_REQUIRE(!points.empty(), ErrorCode::InvalidArgument, "no points to fit");
    SKBOOT_REQUIRE(q > 0.0 && q <= 1.0, ErrorCode::InvalidArgument, "coverage q must lie in (0,1]");
    const auto d = points.front().size();
    const auto n = points.size();
    SKBOOT_REQUIRE(n >= static_cast<std::size_t>(d) + 1, ErrorCode::SingularCovariance,
                   "need at least d+1 points to fit an ellipsoid");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& p : points) {
        const Eigen::VectorXd r = p - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(r);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n - 1);
    SKBOOT_REQUIRE(numerically_pd(cov), ErrorCode::SingularCovariance,
                   "sample covariance of the moment vectors is singular");

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = llt.matrixL().solve(points[i] - mean).squaredNorm();
    const std::size_t idx = rank_index(q, n);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(idx - 1), dist.end());
    return Ellipsoid(std::move(mean), std::move(cov), dist[idx - 1]);
}

double binomial_cdf(long c, long n, double p) {
    if (c < 0) return 0.0;
    if (c >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lnf = std::lgamma(static_cast<double>(n) + 1.0);
    double sum = 0.0;
    for (long i = 0; i <= c; ++i) {
        const double di = static_cast<double>(i);
        sum += std::exp(lnf - std::lgamma(di + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) + di * lp +
                        static_cast<double>(n - i) * lq);
    }
    return std::min(sum, 1.0);
}

TestSizing size_binomial_test(double alpha_I, double power, double p0, double p1) {
    SKBOOT_REQUIRE(0.0 < alpha_I && alpha_I < 1.0, ErrorCode::InvalidArgument, "alpha_I must lie in (0,1)");
    SKBOOT_REQUIRE(0.0 < power && power < 1.0, ErrorCode::InvalidArgument, "power must lie in (0,1)");
    SKBOOT_REQUIRE(0.0 < p1 && p1 < p0 && p0 < 1.0, ErrorCode::InvalidArgument, "require 0 < p1 < p0 < 1");

    static std::mutex mutex;
    static std::map<std::tuple<double, double, double, double>, TestSizing> cache;
    const auto key = std::make_tuple(alpha_I, power, p0, p1);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    TestSizing out{0, 0, alpha_I, power, p0, p1};
    for (long n = 1;; ++n) {
        // Largest c with P{X <= c | p0} <= alpha_I; the pmf is summed
        // incrementally so each n costs O(c).
        const double lp = std::log(p0);
        const double lq = std::log1p(-p0);
        const double lnf = std::lgamma(static_cast<double>(n) + 1.0);
        double cdf = 0.0;
        long c = -1;
        for (long i = 0; i <= n; ++i) {
            const double di = static_cast<double>(i);
            cdf += std::exp(lnf - std::lgamma(di + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) + di * lp +
                            static_cast<double>(n - i) * lq);
            if (cdf > alpha_I) break;
            c = i;
        }
        if (c < 0) continue;
        if (binomial_cdf(c, n, p1) >= power) {
            out.B1 = n;
            out.c = c;
            break;
        }
    }
    std::lock_guard lock(mutex);
    cache.emplace(key, out);
    return out;
}

std::size_t default_initial_resamples(std::size_t d) noexcept {
    return std::max<std::size_t>(1000, 20 * d);
}

bool coverage_test_accepts(const Ellipsoid& e, std::span<const MomentVector> draws, const TestSizing& sizing) {
    long inside = 0;
    for (const auto& x : draws)
        if (e.contains(x)) ++inside;
    return inside > sizing.c;
}

DesignSpace validate_design_space(const MomentSampler& sampler, std::size_t d, const DesignSpaceOptions& opts,
                                  Rng& rng) {
    const std::size_t B0 = opts.B0 == 0 ? default_initial_resamples(d) : opts.B0;
    SKBOOT_REQUIRE(B0 >= std::max<std::size_t>(10 * d, d + 2), ErrorCode::InvalidArgument,
                   "initial resample count B0 must be >= max(10 d, d + 2)");
    SKBOOT_REQUIRE(opts.max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
    const TestSizing sizing = size_binomial_test(opts.alpha_I, opts.power, opts.q, opts.p1);

    std::vector<MomentVector> pool;
    pool.reserve(B0 + static_cast<std::size_t>(sizing.B1));
    for (std::size_t b = 0; b < B0; ++b) pool.push_back(sampler(rng));

    std::vector<MomentVector> fresh(static_cast<std::size_t>(sizing.B1));
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        Ellipsoid e = fit_ellipsoid(pool, opts.q);
        long inside = 0;
        for (auto& x : fresh) {
            x = sampler(rng);
            if (e.contains(x)) ++inside;
        }
        if (inside > sizing.c)
            return DesignSpace{std::move(e), sizing, iter, pool.size() + fresh.size(), inside};
        pool.insert(pool.end(), fresh.begin(), fresh.end());
    }
    throw Error(ErrorCode::NoConvergence,
                "design space was not accepted after " + std::to_string(opts.max_iters) + " refinements");
}

DesignSpace validate_design_space(const RealWorldDataset& data, const MomentLayout& layout,
                                  const DesignSpaceOptions& opts, Rng& rng) {
    check_dataset(data, layout);
    MomentSampler sampler = [&](Rng& r) { return draw_bootstrap_moments(data, layout, r); };
    return validate_design_space(sampler, layout.dim(), opts, rng);
}

Eigen::MatrixXd latin_hypercube(std::size_t k, std::size_t d, Rng& rng) {
    SKBOOT_REQUIRE(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
    Eigen::MatrixXd u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> perm(k);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < k; ++i) {
            double v = (static_cast<double>(perm[i]) + unif(rng)) / static_cast<double>(k);
            // Keep strictly inside (0,1) for the inverse CDFs.
            v = std::clamp(v, 1e-12, 1.0 - 1e-12);
            u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return u;
}

Eigen::VectorXd unit_ball_point(std::span<const double> u) {
    const std::size_t d = u.size();
    SKBOOT_REQUIRE(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    if (d == 1) {
        x[0] = 2.0 * u[0] - 1.0;
        return x;
    }
    const double r = std::pow(u[0], 1.0 / static_cast<double>(d));
    // Polar angle j (1-based, j <= d-2) has density proportional to
    // sin^{d-1-j}; with t = (1 - cos phi) / 2 that is Beta((d-j)/2, (d-j)/2).
    std::vector<double> angles(d - 1);
    for (std::size_t j = 1; j + 1 < d; ++j) {
        const double a = static_cast<double>(d - j) / 2.0;
        const double t = boost::math::ibeta_inv(a, a, u[j]);
        angles[j - 1] = std::acos(std::clamp(1.0 - 2.0 * t, -1.0, 1.0));
    }
    angles[d - 2] = 2.0 * std::numbers::pi * u[d - 1];

    double sin_prod = r;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        x[static_cast<Eigen::Index>(i)] = sin_prod * std::cos(angles[i]);
        sin_prod *= std::sin(angles[i]);
    }
    x[static_cast<Eigen::Index>(d - 1)] = sin_prod;
    return x;
}

namespace {

MomentVector ellipsoid_point(const Ellipsoid& e, const Eigen::MatrixXd& lower, const Eigen::MatrixXd& cube,
                             Eigen::Index row) {
    const Eigen::VectorXd u = cube.row(row).transpose();
    const Eigen::VectorXd ball = unit_ball_point(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
    return e.center() + std::sqrt(e.threshold()) * (lower * ball);
}

}  // namespace

std::vector<MomentVector> sample_in_ellipsoid(const Ellipsoid& e, std::size_t k, Rng& rng) {
    const Eigen::MatrixXd cube = latin_hypercube(k, e.dim(), rng);
    const Eigen::MatrixXd lower = e.cholesky_lower();
    std::vector<MomentVector> out;
    out.reserve(k);
    for (Eigen::Index i = 0; i < cube.rows(); ++i) out.push_back(ellipsoid_point(e, lower, cube, i));
    return out;
}

std::vector<MomentVector> fill_design(const Ellipsoid& e, const MomentLayout& layout, std::size_t k, Rng& rng,
                                      std::size_t* candidates_out, std::size_t* rejected_out) {
    SKBOOT_REQUIRE(e.dim() == layout.dim(), ErrorCode::LayoutMismatch, "ellipsoid dimension does not match layout");
    const Eigen::MatrixXd lower = e.cholesky_lower();
    std::vector<MomentVector> points(k);
    std::vector<std::size_t> missing;
    std::size_t candidates = 0;
    std::size_t rejected = 0;

    const Eigen::MatrixXd first = latin_hypercube(k, e.dim(), rng);
    for (std::size_t i = 0; i < k; ++i) {
        auto x = ellipsoid_point(e, lower, first, static_cast<Eigen::Index>(i));
        ++candidates;
        if (is_valid_design_moment(layout, x)) {
            points[i] = std::move(x);
        } else {
            ++rejected;
            missing.push_back(i);
        }
    }

    constexpr int kMaxRounds = 1000;
    int round = 0;
    std::size_t next = 0;
    while (next < missing.size()) {
        SKBOOT_REQUIRE(static_cast<double>(rejected) <= 0.9 * static_cast<double>(candidates) && round < kMaxRounds,
                       ErrorCode::ValidityStarvation,
                       std::to_string(rejected) + " of " + std::to_string(candidates) +
                           " candidate design points violate moment validity");
        ++round;
        const Eigen::MatrixXd cube = latin_hypercube(k, e.dim(), rng);
        for (Eigen::Index r = 0; r < cube.rows() && next < missing.size(); ++r) {
            auto x = ellipsoid_point(e, lower, cube, r);
            ++candidates;
            if (is_valid_design_moment(layout, x)) {
                points[missing[next++]] = std::move(x);
            } else {
                ++rejected;
            }
        }
    }
    SKBOOT_REQUIRE(static_cast<double>(rejected) <= 0.9 * static_cast<double>(candidates),
                   ErrorCode::ValidityStarvation,
                   std::to_string(rejected) + " of " + std::to_string(candidates) +
                       " candidate design points violate moment validity");
    if (candidates_out) *candidates_out = candidates;
    if (rejected_out) *rejected_out = rejected;
    return points;
}

ExperimentDesign build_design(const RealWorldDataset& data, const MomentLayout& layout,
                              const DesignSpaceOptions& opts, std::size_t k, std::size_t N, Rng& rng) {
    SKBOOT_REQUIRE(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
    SKBOOT_REQUIRE(N >= 2 * k, ErrorCode::InvalidArgument, "budget N must be >= 2 k");
    DesignSpace space = validate_design_space(data, layout, opts, rng);
    std::size_t candidates = 0;
    std::size_t rejected = 0;
    auto points = fill_design(space.ellipsoid, layout, k, rng, &candidates, &rejected);
    return ExperimentDesign{std::move(points), static_cast<int>(N / k), std::move(space), candidates, rejected};
}

}  // namespace skboot
