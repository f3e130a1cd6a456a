#include "skboot/config.hpp"
#include "skboot/error.hpp"
#include "skboot/io.hpp"

#include <catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace skboot;
using Catch::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

std::filesystem::path temp_dir() {
    auto p = std::filesystem::temp_directory_path() / "skboot_io_test";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("scatter export round-trips") {
    std::vector<ScatterPoint> pts{{{50, 20, 10}, "ci0", 0.712345678901234, -0.0523},
                                  {{5000, 130, 100}, "ci_plus", 1e-7, 0.013}};
    std::stringstream ss;
    io::write_scatter(ss, pts);
    const auto back = io::read_scatter(ss);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].cell.m == pts[i].cell.m);
        CHECK(back[i].cell.k == pts[i].cell.k);
        CHECK(back[i].cell.n == pts[i].cell.n);
        CHECK(back[i].interval == pts[i].interval);
        CHECK(back[i].ratio == pts[i].ratio);
        CHECK(back[i].coverage_error == pts[i].coverage_error);
    }

    std::stringstream empty;
    io::write_scatter(empty, {});
    CHECK(empty.str() == std::string(io::kScatterHeader) + "\n");
    CHECK(io::read_scatter(empty).empty());

    std::stringstream bad("m,k\n1,2\n");
    CHECK(code_of([&] { io::read_scatter(bad); }) == ErrorCode::IoError);
}

TEST_CASE("CSV headers and row shapes") {
    CoverageRow row;
    row.cell = {500, 40, 50};
    row.reps = 200;
    std::stringstream cov;
    io::write_coverage(cov, std::vector<CoverageRow>{row});
    std::string header, line;
    std::getline(cov, header);
    std::getline(cov, line);
    CHECK(header == io::kCoverageHeader);
    CHECK(std::count(line.begin(), line.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK(line.rfind("500,40,50,200,0,", 0) == 0);

    std::stringstream sens;
    io::write_sensitivity(sens, {row, row});
    std::getline(sens, header);
    CHECK(header == io::kSensitivityHeader);
    std::getline(sens, line);
    CHECK(line.rfind("1,500,", 0) == 0);
    std::getline(sens, line);
    CHECK(line.rfind("2,500,", 0) == 0);

    std::stringstream pu;
    io::write_pu(pu, std::vector<PuRow>{{50, 200, 0, 0.44, 0.1}});
    std::getline(pu, header);
    CHECK(header == io::kPuHeader);
    std::getline(pu, line);
    CHECK(line == "50,200,0,0.44,0.10000000000000001");
}

TEST_CASE("UQ result serialization") {
    UQResult r;
    r.ci0 = {1.0, 2.0};
    r.ci_plus = {0.5, 2.5};
    r.components = {1.0, 0.8, 0.2, std::sqrt(0.8)};
    r.hyper = {3.0, 1.5, Eigen::Vector2d(0.1, 0.2)};
    r.detail.mu = {1.0, 2.0};
    r.detail.sigma2 = {0.1, 0.2};
    r.detail.draws = {1.1, 1.9};
    const auto j = nlohmann::json::parse(io::uq_summary_json(r));
    CHECK(j["ci0"][0] == 1.0);
    CHECK(j["ci_plus"][1] == 2.5);
    CHECK(j["sk"]["theta"].size() == 2);
    CHECK(j["B"] == 2);

    std::stringstream detail;
    io::write_uq_detail(detail, r);
    std::string line;
    std::getline(detail, line);
    CHECK(line == io::kUqDetailHeader);
    int rows = 0;
    while (std::getline(detail, line)) ++rows;
    CHECK(rows == 2);

    std::stringstream summary;
    io::write_uq_summary_csv(summary, r);
    std::getline(summary, line);
    CHECK(line == io::kUqSummaryHeader);
}

TEST_CASE("SK model dump and load") {
    SKData data{Eigen::MatrixXd(3, 2), Eigen::Vector3d(1.0, 2.0, 0.5), Eigen::Vector3d(0.1, 0.2, 0.1)};
    data.design << 0.0, 0.1, 0.5, 0.4, 1.0, 0.9;
    const SKModel model(data, SKHyper{0.7, 1.3, Eigen::Vector2d(2.0, 3.0)});
    const auto back = io::sk_model_from_json(io::sk_model_json(model));
    const Eigen::Vector2d x(0.3, 0.3);
    CHECK(back.predict(x).mean == model.predict(x).mean);
    CHECK(back.predict(x).variance == model.predict(x).variance);
    CHECK(back.hyper().beta0 == 0.7);
    CHECK(code_of([] { io::sk_model_from_json("{\"beta0\": 1}"); }) == ErrorCode::IoError);
}

TEST_CASE("design export") {
    ExperimentDesign d{{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, 4.0)},
                       7,
                       DesignSpace{Ellipsoid(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 1.0), {}, 1, 0, 0},
                       2,
                       0};
    std::stringstream ss;
    io::write_design(ss, d);
    CHECK(ss.str() == "x1,x2,n\n1,2,7\n3,4,7\n");
}

TEST_CASE("observation files") {
    const auto dir = temp_dir();
    {
        std::ofstream f(dir / "ok.txt");
        f << "# interarrival times\n0.25\n\n1.5e-1\n  3\n";
    }
    CHECK(io::read_observations(dir / "ok.txt") == std::vector<double>{0.25, 0.15, 3.0});
    {
        std::ofstream f(dir / "bad.txt");
        f << "0.25\nabc\n";
    }
    CHECK(code_of([&] { io::read_observations(dir / "bad.txt"); }) == ErrorCode::IoError);
    {
        std::ofstream f(dir / "two.txt");
        f << "1 2\n";
    }
    CHECK(code_of([&] { io::read_observations(dir / "two.txt"); }) == ErrorCode::IoError);
    CHECK(code_of([&] { io::read_observations(dir / "none.txt"); }) == ErrorCode::IoError);
}

TEST_CASE("empty configuration means the default network") {
    const auto c = parse_config("{}");
    CHECK(c.inputs.size() == 8);
    CHECK(c.topology.stations == 4);
    CHECK(c.uq.B == 2000);
    const auto s = c.setup();
    CHECK(s.protocol.initial == std::vector<int>{4, 1, 4, 4});
    CHECK(oracle_truth(s) == Approx(12.0 + 2.0 / 3.0));
}

TEST_CASE("shipped configurations parse") {
    const std::filesystem::path root = SKBOOT_SOURCE_DIR;
    const auto desk = load_config(root / "configs" / "desk.json");
    CHECK(desk.tag == "desk");
    CHECK(desk.grid.R == 200);
    CHECK(desk.uq.B == 500);
    const auto def = parse_config("{}");
    const auto xa = desk.truth().moments();
    const auto xb = def.truth().moments();
    CHECK((xa - xb).norm() < 1e-15);
    CHECK(desk.topology.routes[2].on_success == 3);
    CHECK(desk.topology.routes[2].on_failure == 2);

    const auto mm1 = load_config(root / "configs" / "single_station.json");
    CHECK(mm1.topology.stations == 1);
    CHECK(mm1.setup().protocol.initial == std::vector<int>{4});
}

TEST_CASE("configuration errors") {
    auto cfg = [](const std::string& text) { return code_of([&] { parse_config(text); }); };
    CHECK(cfg("{ not json") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"colour": 1})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"grid": {"m": [50], "extra": 1}})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"grid": {"R": 0}})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"uq": {"B": 10}})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"uq": {"k": 40, "N": 50}})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"protocol": {"initial": "warm"}})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"inputs": [{"label": "a", "family": "gamma", "shape": 1}]})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"inputs": [{"label": "a", "family": "weibull", "p": 1}]})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"inputs": [{"label": "a", "family": "bernoulli", "p": 1.5}]})") == ErrorCode::ConfigError);
    CHECK(cfg(R"({"oracle": {"x": [1, 2]}})") == ErrorCode::ConfigError);
    // Topology naming a process that does not exist.
    CHECK(cfg(R"({
        "inputs": [{"label": "a", "family": "gamma", "mean": 1, "sd": 1},
                   {"label": "s", "family": "gamma", "mean": 0.5, "sd": 0.5}],
        "topology": {"stations": 1, "arrival": "a", "service": ["t"], "routes": ["exit"]}
    })") == ErrorCode::ConfigError);
    // Bernoulli routing bound to a gamma process.
    CHECK(cfg(R"({
        "inputs": [{"label": "a", "family": "gamma", "mean": 1, "sd": 1},
                   {"label": "s", "family": "gamma", "mean": 0.5, "sd": 0.5}],
        "topology": {"stations": 1, "arrival": "a", "service": ["s"],
                     "routes": [{"process": "s", "success": "exit", "failure": 1}]}
    })") == ErrorCode::ConfigError);
}

TEST_CASE("presets and seeds") {
    auto c = parse_config("{}");
    c.apply(Preset::Paper);
    CHECK(c.grid.R == 1000);
    CHECK(c.uq.B == 2000);
    CHECK(c.grid.cells().size() == 36);
    c.apply(Preset::Desk);
    CHECK(c.grid.R == 200);
    CHECK(c.uq.B == 500);
    c.set_seed(99);
    CHECK(c.setup().uq.seed == 99);
    CHECK(c.grid.seed == 99);
    CHECK(preset_from_string("desk") == Preset::Desk);
    CHECK(code_of([] { preset_from_string("huge"); }) == ErrorCode::ConfigError);
}

TEST_CASE("relative data paths resolve against the config directory") {
    const auto dir = temp_dir();
    {
        std::ofstream f(dir / "arr.txt");
        f << "0.1\n0.2\n";
    }
    const auto c = parse_config(R"({
        "inputs": [{"label": "a", "family": "gamma", "mean": 0.25, "sd": 0.25, "data": "arr.txt"},
                   {"label": "s", "family": "gamma", "mean": 0.2, "sd": 0.2}],
        "topology": "single_station"
    })",
                                dir);
    REQUIRE(c.inputs[0].data);
    CHECK(*c.inputs[0].data == dir / "arr.txt");
    CHECK_FALSE(c.inputs[1].data);
}
