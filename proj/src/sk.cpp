#include "skboot/sk.hpp"

#include "skboot/design.hpp"
#include "skboot/error.hpp"
#include "skboot/nelder_mead.hpp"
#include "skboot/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace skboot {

namespace {

constexpr double kPivotFloor = 1e-14;
constexpr double kNegativeVarianceTolerance = 1e-10;

bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt, double mean_diag) {
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd d = llt.matrixLLT().diagonal();
    if (!d.allFinite()) return false;
    return d.minCoeff() > 0.0 && d.cwiseAbs2().minCoeff() > kPivotFloor * mean_diag;
}

double sample_variance(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

void check_data(const SKData& data) {
    SKBOOT_REQUIRE(data.points() >= 1, ErrorCode::InvalidArgument, "stochastic kriging needs at least one point");
    SKBOOT_REQUIRE(data.ybar.size() == data.points() && data.intrinsic.size() == data.points(),
                   ErrorCode::InvalidArgument, "responses and intrinsic variances must have one entry per point");
    SKBOOT_REQUIRE((data.intrinsic.array() >= 0.0).all() && data.intrinsic.allFinite(), ErrorCode::InvalidArgument,
                   "intrinsic variances must be finite and non-negative");
    SKBOOT_REQUIRE(data.ybar.allFinite() && data.design.allFinite(), ErrorCode::InvalidArgument,
                   "design and responses must be finite");
}

}  // namespace

SKData make_sk_data(std::span<const Eigen::VectorXd> points, std::span<const PointSummary> summaries) {
    SKBOOT_REQUIRE(!points.empty() && points.size() == summaries.size(), ErrorCode::InvalidArgument,
                   "need one summary per design point");
    const auto k = static_cast<Eigen::Index>(points.size());
    const auto d = points.front().size();
    SKData data{Eigen::MatrixXd(k, d), Eigen::VectorXd(k), Eigen::VectorXd(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& s = summaries[static_cast<std::size_t>(i)];
        SKBOOT_REQUIRE(s.reps >= 2, ErrorCode::InvalidArgument, "each design point needs at least two replications");
        SKBOOT_REQUIRE(s.variance >= 0.0, ErrorCode::InvalidArgument, "sample variance must be non-negative");
        data.design.row(i) = points[static_cast<std::size_t>(i)].transpose();
        data.ybar[i] = s.mean;
        data.intrinsic[i] = s.variance / s.reps;
    }
    return data;
}

double gauss_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
    SKBOOT_REQUIRE(x.size() == y.size() && x.size() == theta.size(), ErrorCode::InvalidArgument,
                   "dimension mismatch in correlation");
    return std::exp(-(theta.array() * (x - y).array().square()).sum());
}

Eigen::MatrixXd total_covariance(const SKData& data, double tau2, const Eigen::VectorXd& theta) {
    const Eigen::Index k = data.points();
    Eigen::MatrixXd cov(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        cov(i, i) = tau2 + data.intrinsic[i];
        for (Eigen::Index j = 0; j < i; ++j) {
            const double s =
                tau2 * std::exp(-(theta.array() * (data.design.row(i) - data.design.row(j)).transpose().array().square())
                                     .sum());
            cov(i, j) = s;
            cov(j, i) = s;
        }
    }
    return cov;
}

JitteredCholesky factorize(const Eigen::MatrixXd& k) {
    const double mean_diag = k.diagonal().mean();
    SKBOOT_REQUIRE(std::isfinite(mean_diag) && mean_diag > 0.0, ErrorCode::NumericalFailure,
                   "covariance diagonal is not positive");
    JitteredCholesky out;
    out.llt.compute(k);
    if (usable(out.llt, mean_diag)) return out;
    for (double delta = 1e-10; delta <= 1e-6 * (1.0 + 1e-9); delta *= 10.0) {
        const double add = delta * mean_diag;
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += add;
        out.llt.compute(kj);
        if (usable(out.llt, mean_diag)) {
            out.jitter = add;
            return out;
        }
    }
    throw Error(ErrorCode::NumericalFailure, "Sigma + C could not be factorized even with jitter");
}

namespace {

struct Profiled {
    double beta0;
    double loglik;
};

Profiled profile(const JitteredCholesky& f, const Eigen::VectorXd& ybar, const double* fixed_beta0) {
    const Eigen::Index k = ybar.size();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
    double beta0;
    if (fixed_beta0) {
        beta0 = *fixed_beta0;
    } else {
        const Eigen::VectorXd kinv_one = f.llt.solve(ones);
        beta0 = kinv_one.dot(ybar) / kinv_one.sum();
    }
    const Eigen::VectorXd z = f.llt.matrixL().solve(ybar - beta0 * ones);
    const double logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
    const double ll = -0.5 * static_cast<double>(k) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet -
                      0.5 * z.squaredNorm();
    return {beta0, ll};
}

}  // namespace

double log_likelihood(const SKHyper& hyper, const SKData& data) {
    check_data(data);
    SKBOOT_REQUIRE(hyper.tau2 > 0.0 && hyper.theta.size() == data.dim(), ErrorCode::InvalidArgument,
                   "invalid hyperparameters");
    const auto f = factorize(total_covariance(data, hyper.tau2, hyper.theta));
    return profile(f, data.ybar, &hyper.beta0).loglik;
}

double gls_beta0(double tau2, const Eigen::VectorXd& theta, const SKData& data) {
    check_data(data);
    SKBOOT_REQUIRE(tau2 > 0.0 && theta.size() == data.dim(), ErrorCode::InvalidArgument, "invalid hyperparameters");
    const auto f = factorize(total_covariance(data, tau2, theta));
    return profile(f, data.ybar, nullptr).beta0;
}

SKBounds default_bounds(const SKData& data) {
    double scale = sample_variance(data.ybar);
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    SKBounds b;
    b.log_tau2_lo = std::log(1e-6 * scale);
    b.log_tau2_hi = std::log(1e3 * scale);
    const Eigen::Index d = data.dim();
    b.log_theta_lo.resize(d);
    b.log_theta_hi.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double range = data.design.col(j).maxCoeff() - data.design.col(j).minCoeff();
        if (!(range > 0.0)) range = 1.0;
        b.log_theta_lo[j] = std::log(1e-6 / (range * range));
        b.log_theta_hi[j] = std::log(1e4 / (range * range));
    }
    return b;
}

SKModel::SKModel(SKData data, double tau2, Eigen::VectorXd theta) : data_(std::move(data)) {
    check_data(data_);
    SKBOOT_REQUIRE(tau2 > 0.0 && std::isfinite(tau2), ErrorCode::InvalidArgument, "tau2 must be positive");
    SKBOOT_REQUIRE(theta.size() == data_.dim() && (theta.array() >= 0.0).all(), ErrorCode::InvalidArgument,
                   "theta must have one non-negative entry per dimension");
    hyper_.tau2 = tau2;
    hyper_.theta = std::move(theta);
    hyper_.beta0 = std::numeric_limits<double>::quiet_NaN();
    build_cache();
}

SKModel::SKModel(SKData data, SKHyper hyper) : data_(std::move(data)), hyper_(std::move(hyper)) {
    check_data(data_);
    SKBOOT_REQUIRE(hyper_.tau2 > 0.0 && std::isfinite(hyper_.tau2), ErrorCode::InvalidArgument,
                   "tau2 must be positive");
    SKBOOT_REQUIRE(hyper_.theta.size() == data_.dim() && (hyper_.theta.array() >= 0.0).all(),
                   ErrorCode::InvalidArgument, "theta must have one non-negative entry per dimension");
    SKBOOT_REQUIRE(std::isfinite(hyper_.beta0), ErrorCode::InvalidArgument, "beta0 must be finite");
    build_cache();
}

void SKModel::build_cache() {
    auto f = factorize(total_covariance(data_, hyper_.tau2, hyper_.theta));
    llt_ = std::move(f.llt);
    jitter_ = f.jitter;
    const Eigen::Index k = data_.points();
    kinv_one_ = llt_.solve(Eigen::VectorXd::Ones(k));
    one_kinv_one_ = kinv_one_.sum();
    if (!std::isfinite(hyper_.beta0)) hyper_.beta0 = kinv_one_.dot(data_.ybar) / one_kinv_one_;
    weights_ = llt_.solve(data_.ybar - hyper_.beta0 * Eigen::VectorXd::Ones(k));
    logdet_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    report_.log_likelihood = log_likelihood();
}

double SKModel::log_likelihood() const {
    const Eigen::Index k = data_.points();
    const Eigen::VectorXd z = llt_.matrixL().solve(data_.ybar - hyper_.beta0 * Eigen::VectorXd::Ones(k));
    return -0.5 * static_cast<double>(k) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet_ - 0.5 * z.squaredNorm();
}

Prediction SKModel::predict(const Eigen::VectorXd& x) const {
    SKBOOT_REQUIRE(x.size() == data_.dim(), ErrorCode::InvalidArgument, "prediction point has the wrong dimension");
    const Eigen::Index k = data_.points();
    Eigen::VectorXd cross(k);
    for (Eigen::Index i = 0; i < k; ++i)
        cross[i] = hyper_.tau2 *
                   std::exp(-(hyper_.theta.array() * (data_.design.row(i).transpose() - x).array().square()).sum());
    const double mean = hyper_.beta0 + cross.dot(weights_);
    const Eigen::VectorXd v = llt_.matrixL().solve(cross);
    const double eta = 1.0 - kinv_one_.dot(cross);
    double var = hyper_.tau2 - v.squaredNorm() + eta * eta / one_kinv_one_;
    if (var < 0.0) {
        SKBOOT_REQUIRE(var >= -kNegativeVarianceTolerance * hyper_.tau2, ErrorCode::NumericalFailure,
                       "prediction variance is negative beyond round-off");
        var = 0.0;
    }
    return {mean, var};
}

std::vector<Prediction> SKModel::batch_predict(std::span<const Eigen::VectorXd> xs) const {
    std::vector<Prediction> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(predict(x));
    return out;
}

namespace {

// Likelihood in log-parameters with the pairwise squared differences cached;
// beta0 is profiled out at every evaluation.
class ProfileLikelihood {
public:
    ProfileLikelihood(const SKData& data, const SKBounds& bounds) : data_(data), bounds_(bounds) {
        const Eigen::Index k = data.points();
        const Eigen::Index d = data.dim();
        sqdiff_.resize(k * (k - 1) / 2, d);
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < i; ++j, ++p)
                sqdiff_.row(p) = (data.design.row(i) - data.design.row(j)).array().square();
    }

    [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd& z) const {
        Eigen::VectorXd c = z;
        c[0] = std::clamp(z[0], bounds_.log_tau2_lo, bounds_.log_tau2_hi);
        for (Eigen::Index j = 0; j < data_.dim(); ++j)
            c[j + 1] = std::clamp(z[j + 1], bounds_.log_theta_lo[j], bounds_.log_theta_hi[j]);
        return c;
    }

    double operator()(const Eigen::VectorXd& z) const {
        const Eigen::VectorXd c = clamp(z);
        const double tau2 = std::exp(c[0]);
        const Eigen::VectorXd theta = c.tail(data_.dim()).array().exp();
        const Eigen::Index k = data_.points();
        const Eigen::VectorXd corr = (-(sqdiff_ * theta)).array().exp();
        Eigen::MatrixXd cov(k, k);
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            cov(i, i) = tau2 + data_.intrinsic[i];
            for (Eigen::Index j = 0; j < i; ++j, ++p) cov(i, j) = cov(j, i) = tau2 * corr[p];
        }
        try {
            const auto f = factorize(cov);
            return -profile(f, data_.ybar, nullptr).loglik;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    }

private:
    const SKData& data_;
    const SKBounds& bounds_;
    Eigen::MatrixXd sqdiff_;
};

}  // namespace

SKModel SKModel::fit(SKData data, const SKFitOptions& opts) {
    check_data(data);
    SKBOOT_REQUIRE(opts.starts >= 1, ErrorCode::InvalidArgument, "at least one start is required");
    const Eigen::Index d = data.dim();
    const SKBounds bounds = default_bounds(data);
    const ProfileLikelihood objective(data, bounds);

    Eigen::VectorXd lo(d + 1), hi(d + 1);
    lo << bounds.log_tau2_lo, bounds.log_theta_lo;
    hi << bounds.log_tau2_hi, bounds.log_theta_hi;
    const Eigen::VectorXd width = hi - lo;

    Rng rng(opts.seed);
    const Eigen::MatrixXd starts = latin_hypercube(static_cast<std::size_t>(opts.starts),
                                                   static_cast<std::size_t>(d + 1), rng);
    SKFitReport report;
    report.starts = opts.starts;
    report.under_resolved = data.points() < d + 2;
    const NelderMeadOptions nm{opts.max_iters, opts.ftol};
    Eigen::VectorXd best_z;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < starts.rows(); ++s) {
        const Eigen::VectorXd z0 = lo.array() + starts.row(s).transpose().array() * width.array();
        Eigen::VectorXd step = 0.1 * width;
        for (Eigen::Index j = 0; j <= d; ++j)
            if (z0[j] + step[j] > hi[j]) step[j] = -step[j];
        const auto r = nelder_mead(std::cref(objective), z0, step, nm);
        report.evaluations += r.evaluations;
        if (!std::isfinite(r.value)) {
            ++report.failed_starts;
            continue;
        }
        if (r.value < best) {
            best = r.value;
            best_z = objective.clamp(r.x);
        }
    }
    if (!std::isfinite(best))
        throw Error(ErrorCode::FitFailure, "every likelihood search start failed numerically");

    SKModel model(std::move(data), std::exp(best_z[0]), best_z.tail(d).array().exp().matrix());
    const double ll = model.report_.log_likelihood;
    model.report_ = report;
    model.report_.log_likelihood = ll;
    return model;
}

}  // namespace skboot
