// Command-line front end: loads a run configuration and dispatches to the
// procedure and the macro-replication experiments.

#include "skboot/config.hpp"
#include "skboot/error.hpp"
#include "skboot/harness.hpp"
#include "skboot/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

using namespace skboot;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string preset;
    std::string out_dir;
    bool dry_run = false;
    bool verbose = false;
    std::string trace;
};

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::IoError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::InsufficientB:
        case ErrorCode::LayoutMismatch:
            return 2;
        case ErrorCode::ValidityStarvation:
        case ErrorCode::UndefinedStarvation:
            return 4;
        default:
            return 3;
    }
}

RunConfig resolve(const Options& opt) {
    RunConfig c = opt.config.empty() ? parse_config("{}") : load_config(opt.config);
    c.apply(preset_from_string(opt.preset));
    if (opt.seed) c.set_seed(*opt.seed);
    if (const char* env = std::getenv("SKBOOT_WORKERS")) {
        try {
            c.workers = static_cast<unsigned>(std::stoul(env));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ConfigError, "SKBOOT_WORKERS must be a positive integer");
        }
    }
    if (opt.workers) c.workers = *opt.workers;
    SKBOOT_REQUIRE(c.workers >= 1, ErrorCode::ConfigError, "workers must be >= 1");
    if (!opt.out_dir.empty()) c.out_dir = opt.out_dir;
    c.validate();
    return c;
}

RealWorldDataset load_data(const RunConfig& c) {
    RealWorldDataset data;
    Rng rng(derive_seed(c.seed, stream::kData));
    for (const auto& in : c.inputs) {
        if (in.data) {
            data.samples.push_back(io::read_observations(*in.data));
        } else {
            std::vector<double> s(in.m);
            for (auto& v : s) v = draw(in.model, rng);
            data.samples.push_back(std::move(s));
        }
    }
    return data;
}

void print_vector(const char* name, const Eigen::VectorXd& v) {
    std::cout << name << ":";
    for (Eigen::Index i = 0; i < v.size(); ++i) std::cout << ' ' << v[i];
    std::cout << '\n';
}

std::filesystem::path out_file(const RunConfig& c, const std::string& stem) {
    return c.out_dir / (stem + "_" + c.tag + ".csv");
}

void plan(const std::string& command, const RunConfig& c) {
    std::cout << "config ok: " << command << ", tag " << c.tag << ", seed " << c.seed << ", workers " << c.workers
              << ", out_dir " << c.out_dir.string() << '\n';
    std::cout << "inputs " << c.inputs.size() << ", moment dimension " << c.truth().layout().dim() << ", stations "
              << c.topology.stations << '\n';
    std::cout << "alpha " << c.uq.alpha << ", B " << c.uq.B << '\n';
    if (command == "uq" || command == "design-dump") std::cout << "k " << c.uq.k << ", N " << c.uq.N << '\n';
    if (command == "coverage")
        std::cout << "grid cells " << c.grid.cells().size() << ", R " << c.grid.R << " ("
                  << c.grid.cells().size() * c.grid.R << " macro-replications)\n";
    if (command == "pu") std::cout << "pu levels " << c.pu.m_levels.size() << ", R " << c.pu.R << '\n';
    if (command == "sensitivity")
        std::cout << "sensitivity cell m=" << c.sensitivity.cell.m << " k=" << c.sensitivity.cell.k
                  << " n=" << c.sensitivity.cell.n << ", R " << c.sensitivity.R << '\n';
}

int cmd_uq(const RunConfig& c) {
    const auto data = load_data(c);
    const auto setup = c.setup();
    const auto result = run_aci(data, setup.truth.layout(), setup.topology, setup.protocol, setup.uq);
    {
        auto f = io::open_output(c.out_dir / ("uq_" + c.tag + "_summary.json"));
        f << io::uq_summary_json(result) << '\n';
    }
    {
        auto f = io::open_output(c.out_dir / ("uq_" + c.tag + "_summary.csv"));
        io::write_uq_summary_csv(f, result);
    }
    {
        auto f = io::open_output(c.out_dir / ("uq_" + c.tag + "_detail.csv"));
        io::write_uq_detail(f, result);
    }
    std::cout << std::setprecision(6);
    std::cout << "CI0   [" << result.ci0.lo << ", " << result.ci0.hi << "]\n";
    std::cout << "CI+   [" << result.ci_plus.lo << ", " << result.ci_plus.hi << "]\n";
    std::cout << "sigma2_T " << result.components.total << "  sigma2_I " << result.components.input
              << "  sigma2_M " << result.components.metamodel << '\n';
    std::cout << "ratio " << result.components.ratio << "  P_U " << result.unstable_fraction
              << "  rejected undefined " << result.rejected_undefined << '\n';
    return 0;
}

int cmd_coverage(const RunConfig& c, bool verbose) {
    auto setup = c.setup();
    setup.verbose = verbose;
    const auto rows = coverage_experiment(setup, c.grid);
    {
        auto f = io::open_output(out_file(c, "coverage"));
        io::write_coverage(f, rows);
    }
    {
        auto f = io::open_output(out_file(c, "scatter"));
        io::write_scatter(f, scatter_points(rows, c.uq.alpha));
    }
    std::cout << "truth " << oracle_truth(setup) << '\n';
    io::write_coverage(std::cout, rows);
    return 0;
}

int cmd_pu(const RunConfig& c, bool verbose) {
    auto setup = c.setup();
    setup.verbose = verbose;
    const auto rows = pu_experiment(setup, c.pu.m_levels, c.pu.R, c.seed);
    auto f = io::open_output(out_file(c, "pu"));
    io::write_pu(f, rows);
    io::write_pu(std::cout, rows);
    return 0;
}

int cmd_sensitivity(const RunConfig& c, bool verbose) {
    auto setup = c.setup();
    setup.verbose = verbose;
    const auto result = sensitivity_experiment(setup, c.sensitivity.cell, c.sensitivity.R, c.seed);
    auto f = io::open_output(out_file(c, "sensitivity"));
    io::write_sensitivity(f, result);
    io::write_sensitivity(std::cout, result);
    return 0;
}

int cmd_oracle(const RunConfig& c, const std::string& trace) {
    const auto truth = c.truth();
    const auto layout = truth.layout();
    const MomentVector x = c.oracle_x ? *c.oracle_x : truth.moments();
    if (!is_defined(c.topology, layout, x)) {
        std::cout << "UNDEFINED (a reachable station cannot reach the exit)\n";
        return 0;
    }
    const auto sol = jackson_oracle(c.topology, layout, x);
    std::cout << std::setprecision(10);
    print_vector("lambda", sol.arrival_rate);
    print_vector("rho", sol.utilization);
    std::cout << "max rho: " << sol.max_utilization() << '\n';
    if (sol.stable)
        std::cout << "L: " << sol.in_system << '\n';
    else
        std::cout << "UNSTABLE\n";
    if (!trace.empty()) {
        auto f = io::open_output(trace);
        f << std::setprecision(17) << "time,event,station,in_system\n";
        SimProtocol p = c.protocol;
        if (c.loaded_start && sol.stable) p.initial = loaded_start(c.topology, layout, x);
        Rng rng(derive_seed(c.seed, stream::kSimulation));
        const double y = simulate(c.topology, InputModelSet::from_moments(layout, truth.labels, x), p, rng, &f);
        std::cout << "trace replication time-average: " << y << '\n';
    }
    return 0;
}

int cmd_design_dump(const RunConfig& c) {
    const auto data = load_data(c);
    const auto setup = c.setup();
    const auto design = design_stage(data, setup.truth.layout(), setup.uq);
    auto f = io::open_output(out_file(c, "design"));
    io::write_design(f, design);
    std::cout << "design points " << design.points.size() << ", replications " << design.reps
              << ", ellipsoid iterations " << design.space.iterations << ", rejected candidates "
              << design.rejected << '\n';
    std::cout << "wrote " << out_file(c, "design").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Input-uncertainty intervals for simulation via stochastic kriging and bootstrap"};
    app.require_subcommand(1);
    Options opt;
    auto common = [&opt](CLI::App* sub) {
        sub->add_option("-c,--config", opt.config, "JSON run configuration");
        sub->add_option("--seed", opt.seed, "Base seed (overrides the config)");
        sub->add_option("--workers", opt.workers, "Worker threads for macro-replications");
        sub->add_option("--preset", opt.preset, "Scale preset")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--out-dir", opt.out_dir, "Output directory");
        sub->add_flag("--dry-run", opt.dry_run, "Validate the configuration and exit");
        sub->add_flag("-v,--verbose", opt.verbose, "Progress on stderr");
    };
    auto* uq = app.add_subcommand("uq", "Run the procedure once and write summary and detail files");
    auto* coverage = app.add_subcommand("coverage", "Coverage macro-replications over the (m, k, n) grid");
    auto* pu = app.add_subcommand("pu", "Fraction of unstable bootstrap moments across data sizes");
    auto* sensitivity = app.add_subcommand("sensitivity", "Hyperparameter sensitivity (Case 1 vs Case 2)");
    auto* oracle = app.add_subcommand("oracle", "Solve the traffic equations and print lambda, rho, L");
    auto* design = app.add_subcommand("design-dump", "Build the experiment design and write it as CSV");
    for (auto* sub : {uq, coverage, pu, sensitivity, oracle, design}) common(sub);
    oracle->add_option("--trace", opt.trace, "Write the event log of one replication at x to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig c = resolve(opt);
        if (opt.dry_run) {
            plan(command, c);
            return 0;
        }
        const auto t0 = std::chrono::steady_clock::now();
        int rc = 0;
        if (command == "uq") rc = cmd_uq(c);
        else if (command == "coverage") rc = cmd_coverage(c, opt.verbose);
        else if (command == "pu") rc = cmd_pu(c, opt.verbose);
        else if (command == "sensitivity") rc = cmd_sensitivity(c, opt.verbose);
        else if (command == "oracle") rc = cmd_oracle(c, opt.trace);
        else rc = cmd_design_dump(c);
        if (opt.verbose)
            std::cerr << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                      << " s\n";
        return rc;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
