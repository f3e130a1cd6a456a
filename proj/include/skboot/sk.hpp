#pragma once

// Stochastic kriging with a constant trend and product-form Gaussian
// correlation:
//
//   Y_j(x) = beta0 + W(x) + eps_j(x),   Cov[W(x), W(x')] = tau2 * r(x - x'),
//   r(h) = exp(-sum_j theta_j h_j^2),
//
// with intrinsic covariance C = diag(S^2(x_i) / n_i) plugged in from the
// replication sample variances.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace skboot {

struct PointSummary {
    double mean = 0.0;
    double variance = 0.0;  // sample variance, divisor n - 1
    int reps = 0;
};

struct SKHyper {
    double beta0 = 0.0;
    double tau2 = 1.0;
    Eigen::VectorXd theta;
};

/// Fit inputs: design points (one per row), responses and the diagonal of C.
struct SKData {
    Eigen::MatrixXd design;
    Eigen::VectorXd ybar;
    Eigen::VectorXd intrinsic;

    [[nodiscard]] Eigen::Index points() const noexcept { return design.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return design.cols(); }
};

/// Plug-in C_ii = S^2(x_i) / n_i. Requires n_i >= 2.
SKData make_sk_data(std::span<const Eigen::VectorXd> points, std::span<const PointSummary> summaries);

double gauss_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta);

/// Sigma + C, without jitter.
Eigen::MatrixXd total_covariance(const SKData& data, double tau2, const Eigen::VectorXd& theta);

/// Cholesky factor of a covariance matrix with the escalating diagonal jitter
/// policy (delta * mean(diag), delta = 1e-10 ... 1e-6). Throws NumericalFailure.
struct JitteredCholesky {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;  // absolute amount added to the diagonal
};
JitteredCholesky factorize(const Eigen::MatrixXd& k);

double log_likelihood(const SKHyper& hyper, const SKData& data);
double gls_beta0(double tau2, const Eigen::VectorXd& theta, const SKData& data);

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct SKFitOptions {
    int starts = 10;
    int max_iters = 500;
    double ftol = 1e-8;
    std::uint64_t seed = 0x5eed;
};

struct SKFitReport {
    double log_likelihood = 0.0;
    int starts = 0;
    int failed_starts = 0;
    int evaluations = 0;
    bool under_resolved = false;  // k < d + 2
};

/// Log-parameter search box used by the MLE.
struct SKBounds {
    double log_tau2_lo = 0.0, log_tau2_hi = 0.0;
    Eigen::VectorXd log_theta_lo, log_theta_hi;
};
SKBounds default_bounds(const SKData& data);

class SKModel {
public:
    /// MLE of (tau2, theta) by multi-start Nelder-Mead with beta0 profiled out
    /// by generalized least squares. Throws FitFailure if every start fails.
    static SKModel fit(SKData data, const SKFitOptions& opts = {});

    /// Model with given (tau2, theta); beta0 is the GLS estimate.
    SKModel(SKData data, double tau2, Eigen::VectorXd theta);
    /// Model with every hyperparameter supplied, beta0 included.
    SKModel(SKData data, SKHyper hyper);

    [[nodiscard]] const SKHyper& hyper() const noexcept { return hyper_; }
    [[nodiscard]] const SKData& data() const noexcept { return data_; }
    [[nodiscard]] const SKFitReport& report() const noexcept { return report_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    /// 1' (Sigma + C)^{-1} 1
    [[nodiscard]] double one_kinv_one() const noexcept { return one_kinv_one_; }
    [[nodiscard]] double log_likelihood() const;

    /// (m_p(x), sigma_p^2(x)). Variances in [-1e-10 tau2, 0) are clamped to 0;
    /// anything more negative throws NumericalFailure.
    [[nodiscard]] Prediction predict(const Eigen::VectorXd& x) const;
    [[nodiscard]] std::vector<Prediction> batch_predict(std::span<const Eigen::VectorXd> xs) const;

private:
    void build_cache();

    SKData data_;
    SKHyper hyper_;
    SKFitReport report_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
    Eigen::VectorXd weights_;    // (Sigma + C)^{-1} (ybar - beta0 1)
    Eigen::VectorXd kinv_one_;   // (Sigma + C)^{-1} 1
    double one_kinv_one_ = 0.0;
    double logdet_ = 0.0;
};

}  // namespace skboot
