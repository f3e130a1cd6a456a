#include "skboot/error.hpp"
#include "skboot/input_models.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace skboot;
using Catch::Approx;

TEST_CASE("moments of gamma and bernoulli models") {
    auto g = moments_of(InputDistribution::gamma(1.0, 0.25));
    REQUIRE(g.size() == 2);
    CHECK(g[0] == Approx(0.25));
    CHECK(g[1] == Approx(0.25));

    auto b = moments_of(InputDistribution::bernoulli(0.75));
    REQUIRE(b.size() == 1);
    CHECK(b[0] == 0.75);

    auto g2 = moments_of(InputDistribution::gamma(4.0, 0.5));
    CHECK(g2[0] == Approx(2.0));
    CHECK(g2[1] == Approx(1.0));
}

TEST_CASE("method of moments inverse") {
    const double a[2] = {0.25, 0.25};
    CHECK(params_from_moments(Family::Gamma, a) == InputDistribution::gamma(1.0, 0.25));
    const double b[2] = {2.0, 1.0};
    const auto g = params_from_moments(Family::Gamma, b);
    CHECK(g.shape() == Approx(4.0));
    CHECK(g.scale() == Approx(0.5));

    const double bad_p[1] = {1.2};
    CHECK_THROWS_AS(params_from_moments(Family::Bernoulli, bad_p), Error);
    try {
        params_from_moments(Family::Bernoulli, bad_p);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidMoment);
    }
    const double neg[2] = {-1.0, 1.0};
    CHECK_THROWS_AS(params_from_moments(Family::Gamma, neg), Error);
    const double zero_sd[2] = {1.0, 0.0};
    CHECK_THROWS_AS(params_from_moments(Family::Gamma, zero_sd), Error);
}

TEST_CASE("round trip through moments is the identity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 20.0);
    for (int i = 0; i < 200; ++i) {
        const auto m = InputDistribution::gamma(u(rng), u(rng));
        const auto back = params_from_moments(Family::Gamma, moments_of(m));
        CHECK(std::abs(back.shape() - m.shape()) <= 1e-12 * m.shape());
        CHECK(std::abs(back.scale() - m.scale()) <= 1e-12 * m.scale());
    }
    for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        const auto m = InputDistribution::bernoulli(p);
        CHECK(params_from_moments(Family::Bernoulli, moments_of(m)) == m);
    }
}

TEST_CASE("stack and unstack") {
    const MomentLayout network({Family::Gamma, Family::Gamma, Family::Gamma, Family::Gamma, Family::Gamma,
                              Family::Bernoulli, Family::Bernoulli, Family::Bernoulli});
    CHECK(network.dim() == 13);
    CHECK(network.offset(5) == 10);

    const MomentLayout single({Family::Bernoulli});
    const auto x = stack(single, {{0.5}});
    CHECK(x.size() == 1);
    CHECK(x[0] == 0.5);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Family> fams;
        std::vector<MomentBlock> blocks;
        const int L = 1 + static_cast<int>(rng() % 6);
        for (int l = 0; l < L; ++l) {
            if (rng() % 2) {
                fams.push_back(Family::Gamma);
                blocks.push_back({1.0 + l, 0.5 + l});
            } else {
                fams.push_back(Family::Bernoulli);
                blocks.push_back({0.1 * (l + 1)});
            }
        }
        const MomentLayout layout(fams);
        CHECK(unstack(layout, stack(layout, blocks)) == blocks);
    }

    CHECK_THROWS_AS(stack(single, {{0.5, 0.1}}), Error);
    CHECK_THROWS_AS(stack(single, {{0.5}, {0.5}}), Error);
    CHECK_THROWS_AS(unstack(network, Eigen::VectorXd::Zero(12)), Error);
}

TEST_CASE("design-moment validity box") {
    const MomentLayout layout({Family::Gamma, Family::Bernoulli});
    Eigen::VectorXd x(3);
    x << 1.0, 0.5, 0.5;
    CHECK(is_valid_design_moment(layout, x));
    x << 1.0, 1e-9, 0.5;
    CHECK_FALSE(is_valid_design_moment(layout, x));
    x << -1.0, 0.5, 0.5;
    CHECK_FALSE(is_valid_design_moment(layout, x));
    x << 1.0, 0.5, 1.0;
    CHECK_FALSE(is_valid_design_moment(layout, x));
    x << 1.0, 0.5, 0.0;
    CHECK_FALSE(is_valid_design_moment(layout, x));
}

TEST_CASE("models from moments clamp to simulation-safe values") {
    const MomentLayout layout({Family::Gamma, Family::Bernoulli});
    Eigen::VectorXd x(3);
    x << 2.0, 0.0, 1.0;
    const auto set = InputModelSet::from_moments(layout, {"a", "b"}, x);
    CHECK(set.models[0].mean() == Approx(2.0));
    CHECK(set.models[0].stddev() == Approx(2.0 * kMinRelativeStddev));
    CHECK(set.models[1].probability() == Approx(1.0 - kBernoulliClamp));
    CHECK(set.index_of("b") == 1);
    CHECK_THROWS_AS(set.index_of("c"), Error);
}

TEST_CASE("sampling synthetic data") {
    Rng rng(11);
    InputModelSet one{{"p"}, {InputDistribution::bernoulli(1.0)}};
    const std::size_t five[] = {5};
    const auto d = sample_dataset(one, five, rng);
    CHECK(d.samples[0] == std::vector<double>(5, 1.0));

    InputModelSet g{{"a"}, {InputDistribution::gamma(1.0, 0.25)}};
    const std::size_t big[] = {1000000};
    const auto gd = sample_dataset(g, big, rng);
    const auto em = empirical_moments(gd.samples[0], Family::Gamma);
    CHECK(std::abs(em.block[0] - 0.25) < 3.0 * 0.25 / 1000.0);
    CHECK(std::abs(em.block[1] - 0.25) < 0.01);

    const std::size_t too_small[] = {1};
    CHECK_THROWS_AS(sample_dataset(g, too_small, rng), Error);

    InputModelSet eight{{"a", "b", "c", "d", "e", "f", "g", "h"},
                        {InputDistribution::gamma(1, 1), InputDistribution::gamma(1, 1), InputDistribution::gamma(1, 1),
                         InputDistribution::gamma(1, 1), InputDistribution::gamma(1, 1),
                         InputDistribution::bernoulli(0.5), InputDistribution::bernoulli(0.5),
                         InputDistribution::bernoulli(0.75)}};
    const std::vector<std::size_t> fifty(8, 50);
    const auto ed = sample_dataset(eight, fifty, rng);
    REQUIRE(ed.processes() == 8);
    for (const auto& s : ed.samples) CHECK(s.size() == 50);
    for (std::size_t l = 5; l < 8; ++l)
        for (double v : ed.samples[l]) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("empirical moments use the plug-in standard deviation") {
    const double ones[] = {1, 1, 1, 1};
    CHECK(empirical_moments(ones, Family::Bernoulli).block == MomentBlock{1.0});

    const double two[] = {0, 2};
    const auto e = empirical_moments(two, Family::Gamma);
    CHECK(e.block[0] == Approx(1.0));
    CHECK(e.block[1] == Approx(1.0));
    CHECK_FALSE(e.degenerate);

    const double three[] = {1, 2, 3};
    const auto f = empirical_moments(three, Family::Gamma);
    CHECK(f.block[0] == Approx(2.0));
    CHECK(f.block[1] == Approx(std::sqrt(2.0 / 3.0)));

    const double same[] = {4, 4, 4};
    const auto s = empirical_moments(same, Family::Gamma);
    CHECK(s.degenerate);
    CHECK(s.block[1] == 0.0);
}
