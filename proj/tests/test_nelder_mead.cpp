#include "skboot/nelder_mead.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

using namespace skboot;

TEST_CASE("quadratic bowl") {
    const auto f = [](const Eigen::VectorXd& x) { return (x[0] - 1.0) * (x[0] - 1.0) + 4.0 * (x[1] + 2.0) * (x[1] + 2.0); };
    const auto r = nelder_mead(f, Eigen::Vector2d(5.0, 5.0), Eigen::Vector2d(1.0, 1.0), {2000, 1e-14});
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(r.x[1] + 2.0) < 1e-5);
}

TEST_CASE("rosenbrock") {
    const auto f = [](const Eigen::VectorXd& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const auto r = nelder_mead(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(0.5, 0.5), {5000, 1e-16});
    CHECK(std::abs(r.x[0] - 1.0) < 1e-3);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-3);
}

TEST_CASE("iteration cap and non-finite regions") {
    const auto f = [](const Eigen::VectorXd& x) {
        return x[0] < 0.0 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 2.0) * (x[0] - 2.0);
    };
    const auto r = nelder_mead(f, Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 1.0), {500, 1e-12});
    CHECK(std::abs(r.x[0] - 2.0) < 1e-4);

    const auto capped = nelder_mead(f, Eigen::VectorXd::Constant(1, 100.0), Eigen::VectorXd::Constant(1, 1e-3), {3, 1e-12});
    CHECK(capped.iterations == 3);
    CHECK_FALSE(capped.converged);
}
