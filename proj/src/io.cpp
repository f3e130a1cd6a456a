#include "skboot/io.hpp"

#include "skboot/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace skboot::io {

using nlohmann::json;

namespace {

std::ostream& precise(std::ostream& os) { return os << std::setprecision(17); }

void write_row_fields(std::ostream& os, const CoverageRow& r) {
    os << r.cell.m << ',' << r.cell.k << ',' << r.cell.n << ',' << r.reps << ',' << r.failures << ','
       << r.coverage_ci0 << ',' << r.se_ci0 << ',' << r.coverage_ci_plus << ',' << r.se_ci_plus << ','
       << r.width_ci0_mean << ',' << r.width_ci0_sd << ',' << r.width_ci_plus_mean << ',' << r.width_ci_plus_sd
       << ',' << r.ratio_mean << ',' << r.pu_mean << '\n';
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void write_coverage(std::ostream& os, std::span<const CoverageRow> rows) {
    precise(os) << kCoverageHeader << '\n';
    for (const auto& r : rows) write_row_fields(os, r);
}

void write_sensitivity(std::ostream& os, const SensitivityResult& result) {
    precise(os) << kSensitivityHeader << '\n';
    os << "1,";
    write_row_fields(os, result.case1);
    os << "2,";
    write_row_fields(os, result.case2);
}

void write_pu(std::ostream& os, std::span<const PuRow> rows) {
    precise(os) << kPuHeader << '\n';
    for (const auto& r : rows) os << r.m << ',' << r.reps << ',' << r.failures << ',' << r.mean << ',' << r.sd << '\n';
}

void write_scatter(std::ostream& os, std::span<const ScatterPoint> points) {
    precise(os) << kScatterHeader << '\n';
    for (const auto& p : points)
        os << p.cell.m << ',' << p.cell.k << ',' << p.cell.n << ',' << p.interval << ',' << p.ratio << ','
           << p.coverage_error << '\n';
}

std::vector<ScatterPoint> read_scatter(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kScatterHeader)
        throw Error(ErrorCode::IoError, "scatter file does not start with the expected header");
    std::vector<ScatterPoint> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 6) throw Error(ErrorCode::IoError, "malformed scatter row: " + line);
        try {
            ScatterPoint p;
            p.cell = {std::stoull(f[0]), std::stoull(f[1]), std::stoi(f[2])};
            p.interval = f[3];
            p.ratio = std::stod(f[4]);
            p.coverage_error = std::stod(f[5]);
            out.push_back(std::move(p));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::IoError, "malformed scatter row: " + line);
        }
    }
    return out;
}

void write_uq_summary_csv(std::ostream& os, const UQResult& r) {
    precise(os) << kUqSummaryHeader << '\n';
    os << r.ci0.lo << ',' << r.ci0.hi << ',' << r.ci_plus.lo << ',' << r.ci_plus.hi << ',' << r.components.total
       << ',' << r.components.input << ',' << r.components.metamodel << ',' << r.components.ratio << ','
       << r.unstable_fraction << ',' << r.rejected_undefined << ',' << r.hyper.beta0 << ',' << r.hyper.tau2 << ','
       << r.fit.log_likelihood << ',' << r.design_iterations << ',' << r.design_rejected << '\n';
}

std::string uq_summary_json(const UQResult& r) {
    json j;
    j["ci0"] = {r.ci0.lo, r.ci0.hi};
    j["ci_plus"] = {r.ci_plus.lo, r.ci_plus.hi};
    j["sigma2_T"] = r.components.total;
    j["sigma2_I"] = r.components.input;
    j["sigma2_M"] = r.components.metamodel;
    j["ratio"] = r.components.ratio;
    j["pu"] = r.unstable_fraction;
    j["rejected_undefined"] = r.rejected_undefined;
    j["B"] = r.detail.mu.size();
    j["sk"] = {{"beta0", r.hyper.beta0},
               {"tau2", r.hyper.tau2},
               {"theta", vec_to_json(r.hyper.theta)},
               {"log_likelihood", r.fit.log_likelihood},
               {"starts", r.fit.starts},
               {"failed_starts", r.fit.failed_starts},
               {"evaluations", r.fit.evaluations},
               {"under_resolved", r.fit.under_resolved}};
    j["design"] = {{"iterations", r.design_iterations}, {"rejected", r.design_rejected}};
    return j.dump(2);
}

void write_uq_detail(std::ostream& os, const UQResult& r) {
    precise(os) << kUqDetailHeader << '\n';
    for (std::size_t b = 0; b < r.detail.mu.size(); ++b)
        os << b + 1 << ',' << r.detail.mu[b] << ',' << r.detail.sigma2[b] << ',' << r.detail.draws[b] << '\n';
}

void write_design(std::ostream& os, const ExperimentDesign& design) {
    precise(os);
    const auto d = design.points.empty() ? 0 : design.points.front().size();
    for (Eigen::Index j = 0; j < d; ++j) os << 'x' << j + 1 << ',';
    os << "n\n";
    for (const auto& p : design.points) {
        for (Eigen::Index j = 0; j < d; ++j) os << p[j] << ',';
        os << design.reps << '\n';
    }
}

std::string sk_model_json(const SKModel& model) {
    const auto& data = model.data();
    json pts = json::array();
    for (Eigen::Index i = 0; i < data.points(); ++i) pts.push_back(vec_to_json(data.design.row(i).transpose()));
    json j;
    j["beta0"] = model.hyper().beta0;
    j["tau2"] = model.hyper().tau2;
    j["theta"] = vec_to_json(model.hyper().theta);
    j["design"] = std::move(pts);
    j["ybar"] = vec_to_json(data.ybar);
    j["intrinsic"] = vec_to_json(data.intrinsic);
    return j.dump(2);
}

SKModel sk_model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        SKData data;
        const auto& pts = j.at("design");
        data.ybar = vec_from_json(j.at("ybar"));
        data.intrinsic = vec_from_json(j.at("intrinsic"));
        const auto k = static_cast<Eigen::Index>(pts.size());
        SKBOOT_REQUIRE(k > 0 && data.ybar.size() == k && data.intrinsic.size() == k, ErrorCode::IoError,
                       "SK model arrays have inconsistent lengths");
        const auto d = static_cast<Eigen::Index>(pts.front().size());
        data.design.resize(k, d);
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto row = vec_from_json(pts[static_cast<std::size_t>(i)]);
            SKBOOT_REQUIRE(row.size() == d, ErrorCode::IoError, "ragged design matrix in SK model file");
            data.design.row(i) = row.transpose();
        }
        SKHyper h{j.at("beta0").get<double>(), j.at("tau2").get<double>(), vec_from_json(j.at("theta"))};
        return SKModel(std::move(data), std::move(h));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("bad SK model file: ") + e.what());
    }
}

std::vector<double> read_observations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open observation file " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line.substr(first), &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        const auto rest = line.find_first_not_of(" \t\r", first + used);
        if (used == 0 || rest != std::string::npos || !std::isfinite(v))
            throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": not a finite number");
        out.push_back(v);
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

}  // namespace skboot::io
