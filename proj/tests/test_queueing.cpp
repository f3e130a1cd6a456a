#include "skboot/error.hpp"
#include "skboot/queueing.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace skboot;
using Catch::Approx;

namespace {

InputModelSet mm1(double mean_arrival, double mean_service) {
    return {{"arrival", "service"},
            {InputDistribution::gamma(1.0, mean_arrival), InputDistribution::gamma(1.0, mean_service)}};
}

MomentVector xc() { return default_true_models().moments(); }

// Route moments replaced by (p1, p2, p3).
MomentVector with_routes(double p1, double p2, double p3) {
    MomentVector x = xc();
    x[10] = p1;
    x[11] = p2;
    x[12] = p3;
    return x;
}

}  // namespace

TEST_CASE("path integral over a scripted sample path") {
    PathIntegrator p(2.0, 5.0, 1);
    p.jump(1.0, +1);   // 2 customers from t = 1
    p.jump(3.0, +1);   // 3 from t = 3
    p.jump(4.0, -2);   // 1 from t = 4
    p.jump(6.0, +10);  // after the window
    // 2*(3-2) + 3*(4-3) + 1*(5-4) = 6 over a window of length 3.
    CHECK(std::abs(p.time_average() - 2.0) < 1e-12);

    PathIntegrator q(0.0, 1.0, 3);
    CHECK(q.time_average() == 3.0);
}

TEST_CASE("simulated time average equals the integral of its own event log") {
    const auto topo = default_topology();
    const auto models = default_true_models();
    SimProtocol protocol{5.0, 3.0, {1, 0, 2, 1}};
    Rng rng(3);
    std::stringstream trace;
    const double y = simulate(topo, models, protocol, rng, &trace);

    double prev_t = 0.0, area = 0.0;
    long n = 4;  // initial customers
    const double lo = 5.0, hi = 8.0;
    std::string line;
    int events = 0;
    while (std::getline(trace, line)) {
        std::stringstream ss(line);
        std::string t_s, what, station, count;
        std::getline(ss, t_s, ',');
        std::getline(ss, what, ',');
        std::getline(ss, station, ',');
        std::getline(ss, count, ',');
        const double t = std::stod(t_s);
        REQUIRE(t >= prev_t);
        const double a = std::max(prev_t, lo), b = std::min(t, hi);
        if (b > a) area += static_cast<double>(n) * (b - a);
        n = std::stol(count);
        prev_t = t;
        ++events;
    }
    if (hi > std::max(prev_t, lo)) area += static_cast<double>(n) * (hi - std::max(prev_t, lo));
    CHECK(events > 10);
    CHECK(std::abs(y - area / 3.0) < 1e-12 * (1.0 + y));
}

TEST_CASE("no arrivals and no customers gives zero") {
    auto topo = single_station_topology();
    topo.arrival_process = -1;
    Rng rng(1);
    CHECK(simulate(topo, mm1(0.25, 0.2), SimProtocol{}, rng) == 0.0);

    const auto s = replicate(topo, mm1(0.25, 0.2), SimProtocol{}, 5, rng);
    CHECK(s.mean == 0.0);
    CHECK(s.variance == 0.0);
    CHECK(s.reps == 5);
}

TEST_CASE("long M/M/1 runs agree with rho / (1 - rho)") {
    const auto topo = single_station_topology();
    const SimProtocol protocol{500.0, 5000.0, {4}};
    Rng rng(2024);
    const auto s = replicate(topo, mm1(0.25, 0.2), protocol, 20, rng);
    const double se = std::sqrt(s.variance / 20.0);
    INFO("mean " << s.mean << " se " << se);
    CHECK(std::abs(s.mean - 4.0) < 3.0 * se);
}

TEST_CASE("replications are reproducible and distinct") {
    const auto topo = default_topology();
    const auto models = default_true_models();
    const SimProtocol protocol{200.0, 20.0, {4, 1, 4, 4}};
    Rng a(9), b(9);
    const auto sa = replicate(topo, models, protocol, 2, a);
    const auto sb = replicate(topo, models, protocol, 2, b);
    CHECK(sa.mean == sb.mean);
    CHECK(sa.variance == sb.variance);
    CHECK(sa.variance > 0.0);

    Rng c(10);
    CHECK_THROWS_AS(replicate(topo, models, protocol, 1, c), Error);
}

TEST_CASE("longer services never shorten a single-station queue") {
    const auto topo = single_station_topology();
    const SimProtocol protocol{20.0, 20.0, {}};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng a(seed), b(seed);
        const double fast = simulate(topo, mm1(0.25, 0.1), protocol, a);
        const double slow = simulate(topo, mm1(0.25, 0.2), protocol, b);
        CHECK(slow >= fast);
    }
}

TEST_CASE("doubling service means raises the network average (paired sign test)") {
    const auto topo = default_topology();
    const auto base = default_true_models();
    auto slow = base;
    for (int i = 1; i <= 4; ++i) slow.models[static_cast<std::size_t>(i)] = InputDistribution::gamma(1.0, 0.4);
    const SimProtocol protocol{20.0, 20.0, {}};
    int up = 0, down = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng a(seed), b(seed);
        const double y0 = simulate(topo, base, protocol, a);
        const double y1 = simulate(topo, slow, protocol, b);
        up += y1 > y0;
        down += y1 < y0;
    }
    // Under the null (no effect) up ~ Binomial(up + down, 1/2); p < 0.01
    // needs up well above half: 1 - Phi(2.33) with a normal approximation.
    const double n = up + down;
    CHECK((up - n / 2.0) / std::sqrt(n / 4.0) > 2.33);
}

TEST_CASE("traffic solution of the default network") {
    const auto layout = default_true_models().layout();
    const auto sol = jackson_oracle(default_topology(), layout, xc());
    CHECK(sol.stable);
    CHECK(sol.arrival_rate[0] == Approx(4.0));
    CHECK(sol.arrival_rate[1] == Approx(2.0));
    CHECK(sol.arrival_rate[2] == Approx(4.0));
    CHECK(sol.arrival_rate[3] == Approx(4.0));
    CHECK(sol.max_utilization() == Approx(0.8));
    CHECK(sol.in_system == Approx(12.0 + 2.0 / 3.0));
    CHECK(loaded_start(default_topology(), layout, xc()) == std::vector<int>{4, 1, 4, 4});
}

TEST_CASE("single-station oracle and stability") {
    const auto topo = single_station_topology();
    const auto layout = mm1(0.25, 0.2).layout();
    const auto sol = jackson_oracle(topo, layout, mm1(0.25, 0.2).moments());
    CHECK(sol.in_system == Approx(4.0));
    CHECK_FALSE(is_unstable(topo, layout, mm1(0.25, 0.2).moments()));
    CHECK(is_unstable(topo, layout, mm1(0.2, 0.25).moments()));
    CHECK(is_unstable(topo, layout, mm1(0.2, 0.2).moments()));
    CHECK_FALSE(is_unstable(topo, layout, mm1(1e9, 0.2).moments()));
    const auto bad = jackson_oracle(topo, layout, mm1(0.2, 0.25).moments());
    CHECK_FALSE(bad.stable);
    CHECK(std::isinf(bad.in_system));
    CHECK(is_defined(topo, layout, mm1(0.25, 0.2).moments()));
}

TEST_CASE("undefined routing") {
    const auto topo = default_topology();
    const auto layout = default_true_models().layout();
    CHECK(is_defined(topo, layout, xc()));
    CHECK(is_defined(topo, layout, with_routes(0.1, 0.9, 0.3)));
    CHECK_FALSE(is_defined(topo, layout, with_routes(0.0, 0.665, 0.0)));
    CHECK(is_defined(topo, layout, with_routes(1.0, 1.0, 1.0)));
    CHECK(is_unstable(topo, layout, with_routes(0.5, 0.5, 0.1)));
}

TEST_CASE("an absorbing cycle is singular") {
    NetworkTopology t;
    t.stations = 2;
    t.arrival_station = 0;
    t.arrival_process = 0;
    t.service_process = {1, 2};
    t.routes = {Route::fixed(1), Route::fixed(0)};
    const InputModelSet models{{"a", "s1", "s2"},
                               {InputDistribution::gamma(1, 0.25), InputDistribution::gamma(1, 0.2),
                                InputDistribution::gamma(1, 0.2)}};
    const auto layout = models.layout();
    CHECK_FALSE(is_defined(t, layout, models.moments()));
    try {
        jackson_oracle(t, layout, models.moments());
        FAIL("expected SingularTraffic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularTraffic);
    }
}

TEST_CASE("topology validation") {
    const auto layout = default_true_models().layout();
    CHECK_NOTHROW(validate(default_topology(), layout));
    auto t = default_topology();
    t.routes[0] = Route::bernoulli(1, 1, 2);  // a gamma process used for routing
    CHECK_THROWS_AS(validate(t, layout), Error);
    t = default_topology();
    t.routes[0] = Route::fixed(7);
    CHECK_THROWS_AS(validate(t, layout), Error);
    t = default_topology();
    t.service_process[2] = 6;  // a Bernoulli process used for service
    CHECK_THROWS_AS(validate(t, layout), Error);
}
