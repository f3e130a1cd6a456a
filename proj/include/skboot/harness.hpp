#pragma once

// Macro-replication experiments: coverage of CI0 / CI+ over a grid of
// (m, k, n) cells, the unstable-moment fraction across data sizes, and the
// hyperparameter sensitivity comparison.

#include "skboot/aci.hpp"
#include "skboot/queueing.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace skboot {

struct Cell {
    std::size_t m = 0;  // real-world observations per process
    std::size_t k = 0;  // design points
    int n = 0;          // replications per design point
    [[nodiscard]] std::uint64_t hash() const noexcept;
};

struct ExperimentGrid {
    std::vector<std::size_t> m_levels{50, 500, 5000};
    std::vector<std::size_t> k_levels{20, 40, 80, 130};
    std::vector<int> n_levels{10, 50, 100};
    std::size_t R = 1000;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] std::vector<Cell> cells() const;
};

struct ExperimentSetup {
    NetworkTopology topology;
    InputModelSet truth;
    SimProtocol protocol;
    UQConfig uq;  // k, N and seed are overwritten per cell and macro-rep
    unsigned workers = 1;
    bool verbose = false;  // per-rep progress on stderr
};

/// Steady-state mean at the true moments (the coverage target).
double oracle_truth(const ExperimentSetup& setup);

struct CoverageRow {
    Cell cell;
    std::size_t reps = 0;      // successful macro-replications
    std::size_t failures = 0;  // excluded macro-replications
    double coverage_ci0 = 0.0;
    double se_ci0 = 0.0;
    double coverage_ci_plus = 0.0;
    double se_ci_plus = 0.0;
    double width_ci0_mean = 0.0;
    double width_ci0_sd = 0.0;
    double width_ci_plus_mean = 0.0;
    double width_ci_plus_sd = 0.0;
    double ratio_mean = 0.0;
    double pu_mean = 0.0;
};

/// Outcome of one macro-replication; `ok` is false when it failed.
struct MacroRep {
    bool ok = false;
    bool covered_ci0 = false;
    bool covered_ci_plus = false;
    double width_ci0 = 0.0;
    double width_ci_plus = 0.0;
    double ratio = 0.0;
    double pu = 0.0;
};

CoverageRow aggregate(const Cell& cell, std::span<const MacroRep> reps);

/// Seed of macro-replication `rep` in `cell`; independent of which other
/// cells are run.
std::uint64_t macro_seed(std::uint64_t base, const Cell& cell, std::size_t rep) noexcept;

MacroRep coverage_macro_rep(const ExperimentSetup& setup, const Cell& cell, double truth, std::uint64_t seed);

std::vector<CoverageRow> coverage_experiment(const ExperimentSetup& setup, const ExperimentGrid& grid);

struct PuRow {
    std::size_t m = 0;
    std::size_t reps = 0;
    std::size_t failures = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Per macro-rep: fresh data of size m, B bootstrap moment vectors (undefined
/// ones re-drawn when setup.uq.reject_undefined), fraction unstable.
std::vector<PuRow> pu_experiment(const ExperimentSetup& setup, std::span<const std::size_t> m_levels,
                                 std::size_t R, std::uint64_t seed);

struct SensitivityResult {
    CoverageRow case1;  // hyperparameters fitted on the outputs used for prediction
    CoverageRow case2;  // hyperparameters fitted on an independent set of outputs
};

std::pair<MacroRep, MacroRep> sensitivity_macro_rep(const ExperimentSetup& setup, const Cell& cell, double truth,
                                                    std::uint64_t seed);

SensitivityResult sensitivity_experiment(const ExperimentSetup& setup, const Cell& cell, std::size_t R,
                                         std::uint64_t seed);

struct ScatterPoint {
    Cell cell;
    std::string interval;  // "ci0" or "ci_plus"
    double ratio = 0.0;
    double coverage_error = 0.0;  // empirical coverage minus 1 - alpha
};

std::vector<ScatterPoint> scatter_points(std::span<const CoverageRow> rows, double alpha);

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by a body is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace skboot
