#include "skboot/error.hpp"
#include "skboot/harness.hpp"
#include "skboot/io.hpp"

#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <sstream>

using namespace skboot;
using Catch::Approx;

namespace {

ExperimentSetup small_setup() {
    ExperimentSetup s;
    s.topology = default_topology();
    s.truth = default_true_models();
    s.protocol.initial = loaded_start(s.topology, s.truth.layout(), s.truth.moments());
    s.uq.B = 100;
    s.uq.sk.starts = 3;
    return s;
}

}  // namespace

TEST_CASE("grid cells and validation") {
    ExperimentGrid g;
    CHECK(g.cells().size() == 36);
    CHECK_NOTHROW(g.validate());
    g.R = 0;
    CHECK_THROWS_AS(g.validate(), Error);
    g = ExperimentGrid{};
    g.n_levels = {1};
    CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("macro seeds depend on the cell and rep only") {
    const Cell a{500, 20, 10}, b{500, 20, 50};
    CHECK(macro_seed(1, a, 0) == macro_seed(1, a, 0));
    CHECK(macro_seed(1, a, 0) != macro_seed(1, a, 1));
    CHECK(macro_seed(1, a, 0) != macro_seed(1, b, 0));
    CHECK(macro_seed(1, a, 0) != macro_seed(2, a, 0));
}

TEST_CASE("aggregation") {
    std::vector<MacroRep> reps(4);
    reps[0] = {true, true, true, 1.0, 2.0, 0.5, 0.0};
    reps[1] = {true, false, true, 3.0, 4.0, 0.7, 0.1};
    reps[2] = {true, false, false, 2.0, 3.0, 0.6, 0.2};
    reps[3] = {};  // failed
    const auto row = aggregate({50, 20, 10}, reps);
    CHECK(row.reps == 3);
    CHECK(row.failures == 1);
    CHECK(row.coverage_ci0 == Approx(1.0 / 3.0));
    CHECK(row.coverage_ci_plus == Approx(2.0 / 3.0));
    CHECK(row.se_ci_plus == Approx(std::sqrt((2.0 / 3.0) * (1.0 / 3.0) / 3.0)));
    CHECK(row.width_ci0_mean == Approx(2.0));
    CHECK(row.width_ci0_sd == Approx(1.0));
    CHECK(row.ratio_mean == Approx(0.6));
    CHECK(row.pu_mean == Approx(0.1));

    const auto empty = aggregate({50, 20, 10}, std::vector<MacroRep>(2));
    CHECK(empty.reps == 0);
    CHECK(empty.failures == 2);
    CHECK(std::isfinite(empty.coverage_ci0));
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw Error(ErrorCode::NumericalFailure, "boom");
                    }),
                    Error);
}

TEST_CASE("one macro-replication and reproducible coverage output") {
    auto setup = small_setup();
    ExperimentGrid grid;
    grid.m_levels = {500};
    grid.k_levels = {15};
    grid.n_levels = {4};
    grid.R = 2;
    grid.seed = 11;
    const auto rows = coverage_experiment(setup, grid);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].reps + rows[0].failures == 2);
    CHECK(rows[0].coverage_ci0 >= 0.0);
    CHECK(rows[0].coverage_ci_plus <= 1.0);

    setup.workers = 2;
    const auto again = coverage_experiment(setup, grid);
    std::stringstream a, b;
    io::write_coverage(a, rows);
    io::write_coverage(b, again);
    CHECK(a.str() == b.str());
}

TEST_CASE("unstable fraction vanishes for large samples") {
    auto setup = small_setup();
    const std::size_t levels[] = {100000};
    const auto rows = pu_experiment(setup, levels, 2, 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean == 0.0);
    CHECK(rows[0].failures == 0);

    // A lightly loaded single queue is never unstable at m = 10^4.
    ExperimentSetup light;
    light.topology = single_station_topology();
    light.truth = {{"a", "s"}, {InputDistribution::gamma(1.0, 1.0), InputDistribution::gamma(1.0, 0.1)}};
    light.uq.B = 200;
    const std::size_t big[] = {10000};
    CHECK(pu_experiment(light, big, 3, 1)[0].mean == 0.0);
}

TEST_CASE("sensitivity cases share data and bootstrap draws") {
    auto setup = small_setup();
    const Cell cell{500, 15, 4};
    const double truth = oracle_truth(setup);
    CHECK(truth == Approx(12.0 + 2.0 / 3.0));
    const auto [c1, c2] = sensitivity_macro_rep(setup, cell, truth, 99);
    CHECK(c1.ok);
    CHECK(c2.ok);
    CHECK(c1.pu == c2.pu);

    const auto r = sensitivity_experiment(setup, cell, 2, 3);
    CHECK(r.case1.reps == r.case2.reps);
    const auto r2 = sensitivity_experiment(setup, cell, 2, 3);
    CHECK(r.case1.coverage_ci_plus == r2.case1.coverage_ci_plus);
    CHECK(r.case2.width_ci_plus_mean == r2.case2.width_ci_plus_mean);
}

TEST_CASE("scatter points") {
    CHECK(scatter_points(std::vector<CoverageRow>{}, 0.05).empty());
    CoverageRow row;
    row.cell = {50, 20, 10};
    row.reps = 10;
    row.coverage_ci0 = 0.8;
    row.coverage_ci_plus = 0.9;
    row.ratio_mean = 0.7;
    const auto pts = scatter_points(std::vector<CoverageRow>{row, row}, 0.05);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].interval == "ci0");
    CHECK(pts[0].coverage_error == Approx(-0.15));
    CHECK(pts[1].interval == "ci_plus");
    CHECK(pts[1].coverage_error == Approx(-0.05));
}
