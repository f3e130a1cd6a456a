#include "skboot/harness.hpp"

#include "skboot/bootstrap.hpp"
#include "skboot/error.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

namespace skboot {

std::uint64_t Cell::hash() const noexcept {
    return derive_seed(static_cast<std::uint64_t>(m), {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n)});
}

void ExperimentGrid::validate() const {
    SKBOOT_REQUIRE(!m_levels.empty() && !k_levels.empty() && !n_levels.empty(), ErrorCode::InvalidArgument,
                   "grid levels must be non-empty");
    for (auto m : m_levels) SKBOOT_REQUIRE(m >= 2, ErrorCode::InvalidArgument, "m levels must be >= 2");
    for (auto k : k_levels) SKBOOT_REQUIRE(k >= 1, ErrorCode::InvalidArgument, "k levels must be positive");
    for (auto n : n_levels) SKBOOT_REQUIRE(n >= 2, ErrorCode::InvalidArgument, "n levels must be >= 2");
    SKBOOT_REQUIRE(R >= 1, ErrorCode::InvalidArgument, "R must be >= 1");
}

std::vector<Cell> ExperimentGrid::cells() const {
    std::vector<Cell> out;
    for (auto m : m_levels)
        for (auto k : k_levels)
            for (auto n : n_levels) out.push_back({m, k, n});
    return out;
}

double oracle_truth(const ExperimentSetup& setup) {
    const auto layout = setup.truth.layout();
    const auto sol = jackson_oracle(setup.topology, layout, setup.truth.moments());
    SKBOOT_REQUIRE(sol.stable, ErrorCode::InvalidArgument, "true models give an unstable network; no finite truth");
    return sol.in_system;
}

std::uint64_t macro_seed(std::uint64_t base, const Cell& cell, std::size_t rep) noexcept {
    return derive_seed(base, {cell.hash(), static_cast<std::uint64_t>(rep)});
}

namespace {

RealWorldDataset fresh_data(const ExperimentSetup& setup, std::size_t m, std::uint64_t seed) {
    std::vector<std::size_t> sizes(setup.truth.models.size(), m);
    Rng rng(derive_seed(seed, stream::kData));
    return sample_dataset(setup.truth, sizes, rng);
}

UQConfig cell_config(const ExperimentSetup& setup, const Cell& cell, std::uint64_t seed) {
    UQConfig cfg = setup.uq;
    cfg.k = cell.k;
    cfg.N = cell.k * static_cast<std::size_t>(cell.n);
    cfg.seed = seed;
    return cfg;
}

MacroRep record(const UQResult& r, double truth) {
    MacroRep out;
    out.ok = std::isfinite(r.ci0.lo) && std::isfinite(r.ci0.hi) && std::isfinite(r.ci_plus.lo) &&
             std::isfinite(r.ci_plus.hi) && std::isfinite(r.components.ratio);
    out.covered_ci0 = r.ci0.contains(truth);
    out.covered_ci_plus = r.ci_plus.contains(truth);
    out.width_ci0 = r.ci0.width();
    out.width_ci_plus = r.ci_plus.width();
    out.ratio = r.components.ratio;
    out.pu = r.unstable_fraction;
    return out;
}

void log_failure(const Cell& cell, std::size_t rep, const char* what) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << "macro-rep failed (m=" << cell.m << " k=" << cell.k << " n=" << cell.n << " rep=" << rep
              << "): " << what << '\n';
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

template <class Fn>
std::vector<MacroRep> run_reps(const ExperimentSetup& setup, const Cell& cell, std::size_t R, Fn&& fn) {
    std::vector<MacroRep> reps(R);
    parallel_for(R, setup.workers, [&](std::size_t r) {
        try {
            reps[r] = fn(r);
        } catch (const std::exception& e) {
            log_failure(cell, r, e.what());
            reps[r] = MacroRep{};
        }
        if (setup.verbose) {
            static std::mutex mu;
            std::lock_guard lock(mu);
            std::cerr << "  m=" << cell.m << " k=" << cell.k << " n=" << cell.n << " rep " << r + 1 << "/" << R
                      << '\n';
        }
    });
    return reps;
}

}  // namespace

CoverageRow aggregate(const Cell& cell, std::span<const MacroRep> reps) {
    CoverageRow row;
    row.cell = cell;
    std::vector<double> w0, wp, ratio, pu;
    std::size_t c0 = 0, cp = 0;
    for (const auto& r : reps) {
        if (!r.ok) {
            ++row.failures;
            continue;
        }
        c0 += r.covered_ci0;
        cp += r.covered_ci_plus;
        w0.push_back(r.width_ci0);
        wp.push_back(r.width_ci_plus);
        ratio.push_back(r.ratio);
        pu.push_back(r.pu);
    }
    row.reps = w0.size();
    if (row.reps == 0) return row;
    const double R = static_cast<double>(row.reps);
    row.coverage_ci0 = static_cast<double>(c0) / R;
    row.coverage_ci_plus = static_cast<double>(cp) / R;
    row.se_ci0 = std::sqrt(row.coverage_ci0 * (1.0 - row.coverage_ci0) / R);
    row.se_ci_plus = std::sqrt(row.coverage_ci_plus * (1.0 - row.coverage_ci_plus) / R);
    row.width_ci0_mean = mean_of(w0);
    row.width_ci0_sd = sd_of(w0);
    row.width_ci_plus_mean = mean_of(wp);
    row.width_ci_plus_sd = sd_of(wp);
    row.ratio_mean = mean_of(ratio);
    row.pu_mean = mean_of(pu);
    return row;
}

MacroRep coverage_macro_rep(const ExperimentSetup& setup, const Cell& cell, double truth, std::uint64_t seed) {
    const auto data = fresh_data(setup, cell.m, seed);
    const auto layout = setup.truth.layout();
    const auto r = run_aci(data, layout, setup.topology, setup.protocol, cell_config(setup, cell, seed));
    return record(r, truth);
}

std::vector<CoverageRow> coverage_experiment(const ExperimentSetup& setup, const ExperimentGrid& grid) {
    grid.validate();
    const double truth = oracle_truth(setup);
    std::vector<CoverageRow> rows;
    for (const auto& cell : grid.cells()) {
        const auto reps = run_reps(setup, cell, grid.R, [&](std::size_t r) {
            return coverage_macro_rep(setup, cell, truth, macro_seed(grid.seed, cell, r));
        });
        rows.push_back(aggregate(cell, reps));
    }
    return rows;
}

std::vector<PuRow> pu_experiment(const ExperimentSetup& setup, std::span<const std::size_t> m_levels, std::size_t R,
                                 std::uint64_t seed) {
    SKBOOT_REQUIRE(R >= 1, ErrorCode::InvalidArgument, "R must be >= 1");
    const auto layout = setup.truth.layout();
    const Metamodel zero = [](const MomentVector&) { return Prediction{0.0, 0.0}; };
    std::vector<PuRow> rows;
    for (auto m : m_levels) {
        const Cell cell{m, 0, 0};
        const auto reps = run_reps(setup, cell, R, [&](std::size_t r) {
            const auto s = macro_seed(seed, cell, r);
            const auto data = fresh_data(setup, m, s);
            MomentPredicate defined;
            if (setup.uq.reject_undefined)
                defined = [&](const MomentVector& x) { return is_defined(setup.topology, layout, x); };
            const MomentPredicate unstable = [&](const MomentVector& x) {
                return !is_defined(setup.topology, layout, x) || is_unstable(setup.topology, layout, x);
            };
            const auto ev = evaluate_bootstrap(zero, data, layout, setup.uq.B, derive_seed(s, stream::kBootstrap),
                                               defined, unstable);
            MacroRep out;
            out.ok = true;
            out.pu = ev.unstable_fraction();
            return out;
        });
        PuRow row;
        row.m = m;
        std::vector<double> pu;
        for (const auto& r : reps) {
            if (r.ok)
                pu.push_back(r.pu);
            else
                ++row.failures;
        }
        row.reps = pu.size();
        row.mean = mean_of(pu);
        row.sd = sd_of(pu);
        rows.push_back(row);
    }
    return rows;
}

std::pair<MacroRep, MacroRep> sensitivity_macro_rep(const ExperimentSetup& setup, const Cell& cell, double truth,
                                                    std::uint64_t seed) {
    const auto data = fresh_data(setup, cell.m, seed);
    const auto layout = setup.truth.layout();
    const UQConfig cfg = cell_config(setup, cell, seed);
    cfg.validate();

    const ExperimentDesign design = design_stage(data, layout, cfg);
    const auto out1 =
        simulate_design(design, layout, setup.topology, setup.protocol, derive_seed(seed, stream::kSimulation));
    const auto out2 =
        simulate_design(design, layout, setup.topology, setup.protocol, derive_seed(seed, stream::kSimulationAlt));

    SKFitOptions fit_opts = cfg.sk;
    fit_opts.seed = derive_seed(seed, stream::kFit);
    SKData data1 = make_sk_data(design.points, out1);
    const SKModel case1 = SKModel::fit(data1, fit_opts);
    const SKModel fitted2 = SKModel::fit(make_sk_data(design.points, out2), fit_opts);
    const SKModel case2(std::move(data1), fitted2.hyper());

    auto run = [&](const SKModel& model) {
        return record(summarize(evaluate_network_bootstrap(model, data, layout, setup.topology, cfg), cfg.alpha),
                      truth);
    };
    return {run(case1), run(case2)};
}

SensitivityResult sensitivity_experiment(const ExperimentSetup& setup, const Cell& cell, std::size_t R,
                                         std::uint64_t seed) {
    SKBOOT_REQUIRE(R >= 1, ErrorCode::InvalidArgument, "R must be >= 1");
    const double truth = oracle_truth(setup);
    std::vector<MacroRep> reps1(R), reps2(R);
    parallel_for(R, setup.workers, [&](std::size_t r) {
        try {
            std::tie(reps1[r], reps2[r]) = sensitivity_macro_rep(setup, cell, truth, macro_seed(seed, cell, r));
        } catch (const std::exception& e) {
            log_failure(cell, r, e.what());
            reps1[r] = reps2[r] = MacroRep{};
        }
        if (setup.verbose) {
            static std::mutex mu;
            std::lock_guard lock(mu);
            std::cerr << "  sensitivity rep " << r + 1 << "/" << R << '\n';
        }
    });
    // A rep counts for both cases or for neither.
    for (std::size_t r = 0; r < R; ++r)
        if (!reps1[r].ok || !reps2[r].ok) reps1[r].ok = reps2[r].ok = false;
    return {aggregate(cell, reps1), aggregate(cell, reps2)};
}

std::vector<ScatterPoint> scatter_points(std::span<const CoverageRow> rows, double alpha) {
    std::vector<ScatterPoint> out;
    const double nominal = 1.0 - alpha;
    for (const auto& row : rows) {
        if (row.reps == 0) continue;
        out.push_back({row.cell, "ci0", row.ratio_mean, row.coverage_ci0 - nominal});
        out.push_back({row.cell, "ci_plus", row.ratio_mean, row.coverage_ci_plus - nominal});
    }
    return out;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(workers, n);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace skboot
