#pragma once

// CSV / JSON serialization of experiment outputs, UQ results, designs and
// fitted SK models, plus the plain observation-file reader.

#include "skboot/aci.hpp"
#include "skboot/harness.hpp"
#include "skboot/sk.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace skboot::io {

// Column headers of the experiment CSV files.
inline constexpr const char* kCoverageHeader =
    "m,k,n,reps,failures,coverage_ci0,se_ci0,coverage_ci_plus,se_ci_plus,width_ci0_mean,width_ci0_sd,"
    "width_ci_plus_mean,width_ci_plus_sd,ratio_mean,pu_mean";
inline constexpr const char* kSensitivityHeader =
    "case,m,k,n,reps,failures,coverage_ci0,se_ci0,coverage_ci_plus,se_ci_plus,width_ci0_mean,width_ci0_sd,"
    "width_ci_plus_mean,width_ci_plus_sd,ratio_mean,pu_mean";
inline constexpr const char* kPuHeader = "m,reps,failures,pu_mean,pu_sd";
inline constexpr const char* kScatterHeader = "m,k,n,interval,ratio,coverage_error";
inline constexpr const char* kUqSummaryHeader =
    "ci0_lo,ci0_hi,ci_plus_lo,ci_plus_hi,sigma2_T,sigma2_I,sigma2_M,ratio,pu,rejected_undefined,beta0,tau2,"
    "log_likelihood,design_iterations,design_rejected";
inline constexpr const char* kUqDetailHeader = "b,mu,sigma2_p,M";

void write_coverage(std::ostream& os, std::span<const CoverageRow> rows);
void write_sensitivity(std::ostream& os, const SensitivityResult& result);
void write_pu(std::ostream& os, std::span<const PuRow> rows);
void write_scatter(std::ostream& os, std::span<const ScatterPoint> points);
std::vector<ScatterPoint> read_scatter(std::istream& is);

void write_uq_summary_csv(std::ostream& os, const UQResult& r);
std::string uq_summary_json(const UQResult& r);
void write_uq_detail(std::ostream& os, const UQResult& r);

/// One row per design point: the d moment coordinates x1..xd, then n.
void write_design(std::ostream& os, const ExperimentDesign& design);

std::string sk_model_json(const SKModel& model);
SKModel sk_model_from_json(const std::string& text);

/// One finite observation per line; blank lines and lines starting with '#'
/// are skipped. Throws IoError.
std::vector<double> read_observations(const std::filesystem::path& path);

/// Opens `path` for writing (creating parent directories); throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace skboot::io
