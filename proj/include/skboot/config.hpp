#pragma once

// Declarative run configuration (JSON): true input models, topology,
// simulation protocol, procedure settings, experiment grid and run plumbing.

#include "skboot/harness.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace skboot {

struct InputSpec {
    std::string label;
    InputDistribution model = InputDistribution::bernoulli(0.5);
    std::size_t m = 500;                       // synthetic sample size
    std::optional<std::filesystem::path> data;  // real observations, one per line
};

struct PuSpec {
    std::vector<std::size_t> m_levels{50, 500, 5000};
    std::size_t R = 200;
};

struct SensitivitySpec {
    Cell cell{500, 40, 50};
    std::size_t R = 100;
};

enum class Preset { None, Desk, Paper };
Preset preset_from_string(std::string_view name);

struct RunConfig {
    std::vector<InputSpec> inputs;
    NetworkTopology topology;
    SimProtocol protocol;
    bool loaded_start = true;  // initial counts from the oracle at the true moments
    UQConfig uq;
    ExperimentGrid grid;
    PuSpec pu;
    SensitivitySpec sensitivity;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    unsigned workers = 1;
    std::string tag = "run";
    std::optional<MomentVector> oracle_x;

    [[nodiscard]] InputModelSet truth() const;
    /// Seeds propagated, loaded start resolved.
    [[nodiscard]] ExperimentSetup setup() const;
    /// round(rho / (1 - rho)) per station at the true moments.
    [[nodiscard]] std::vector<int> loaded_start_counts() const;
    void set_seed(std::uint64_t s);
    void apply(Preset preset);
    /// Cross-checks (topology against layout, procedure settings, grid).
    void validate() const;
};

/// Throws ConfigError on malformed input or unknown keys. Relative data paths
/// are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace skboot
