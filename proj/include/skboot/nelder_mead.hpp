#pragma once

#include <Eigen/Core>

#include <functional>

namespace skboot {

struct NelderMeadOptions {
    int max_iters = 500;
    double ftol = 1e-8;  // stop once max - min of the simplex values falls below this
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const NelderMeadOptions& opts = {});

}  // namespace skboot
