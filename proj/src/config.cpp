#include "skboot/config.hpp"

#include "skboot/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace skboot {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ConfigError, where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(where, "unknown key '" + key + "'");
    }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key, "missing or of the wrong type");
    }
}

template <class T>
void maybe(const json& obj, const char* key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::size_t positive_size(const json& obj, const char* key, const std::string& where) {
    const auto v = get<long long>(obj, key, where);
    if (v < 1) fail(where + "." + key, "must be a positive integer");
    return static_cast<std::size_t>(v);
}

void maybe_size(const json& obj, const char* key, const std::string& where, std::size_t& out) {
    if (obj.contains(key)) out = positive_size(obj, key, where);
}

std::vector<std::size_t> size_list(const json& obj, const char* key, const std::string& where) {
    const auto v = get<std::vector<long long>>(obj, key, where);
    if (v.empty()) fail(where + "." + key, "must be a non-empty list");
    std::vector<std::size_t> out;
    for (auto x : v) {
        if (x < 1) fail(where + "." + key, "entries must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

InputSpec parse_input(const json& j, const std::string& where, const std::filesystem::path& base_dir) {
    check_keys(j, where, {"label", "family", "shape", "scale", "mean", "sd", "p", "m", "data"});
    InputSpec spec;
    spec.label = get<std::string>(j, "label", where);
    Family family{};
    try {
        family = family_from_string(get<std::string>(j, "family", where));
    } catch (const Error& e) {
        fail(where + ".family", e.what());
    }
    try {
        if (family == Family::Gamma) {
            const bool by_params = j.contains("shape") || j.contains("scale");
            const bool by_moments = j.contains("mean") || j.contains("sd");
            if (by_params == by_moments || j.contains("p"))
                fail(where, "gamma needs either (shape, scale) or (mean, sd)");
            if (by_params) {
                spec.model = InputDistribution::gamma(get<double>(j, "shape", where), get<double>(j, "scale", where));
            } else {
                const double block[2] = {get<double>(j, "mean", where), get<double>(j, "sd", where)};
                spec.model = params_from_moments(Family::Gamma, block);
            }
        } else {
            if (j.contains("shape") || j.contains("scale") || j.contains("mean") || j.contains("sd"))
                fail(where, "bernoulli takes only 'p'");
            spec.model = InputDistribution::bernoulli(get<double>(j, "p", where));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        fail(where, e.what());
    }
    maybe_size(j, "m", where, spec.m);
    if (j.contains("data")) {
        std::filesystem::path p = get<std::string>(j, "data", where);
        spec.data = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    return spec;
}

int destination(const json& j, const std::string& where, int stations) {
    if (j.is_string()) {
        if (j.get<std::string>() != "exit") fail(where, "destination must be a station number or \"exit\"");
        return kExit;
    }
    if (!j.is_number_integer()) fail(where, "destination must be a station number or \"exit\"");
    const int s = j.get<int>();
    if (s < 1 || s > stations) fail(where, "station " + std::to_string(s) + " out of range");
    return s - 1;
}

std::size_t process_index(const std::vector<InputSpec>& inputs, const std::string& label, const std::string& where) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].label == label) return i;
    fail(where, "no input process labelled '" + label + "'");
}

NetworkTopology parse_topology(const json& j, const std::vector<InputSpec>& inputs) {
    const std::string where = "topology";
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "default") return default_topology();
        if (name == "single_station") return single_station_topology();
        fail(where, "unknown built-in topology '" + name + "'");
    }
    check_keys(j, where, {"stations", "arrival_station", "arrival", "service", "routes"});
    NetworkTopology t;
    t.stations = static_cast<int>(positive_size(j, "stations", where));
    t.arrival_station = destination(j.value("arrival_station", json(1)), where + ".arrival_station", t.stations);
    if (t.arrival_station == kExit) fail(where + ".arrival_station", "must be a station");
    t.arrival_process = static_cast<int>(process_index(inputs, get<std::string>(j, "arrival", where), where));
    const auto service = get<std::vector<std::string>>(j, "service", where);
    if (service.size() != static_cast<std::size_t>(t.stations))
        fail(where + ".service", "needs one process per station");
    for (const auto& s : service) t.service_process.push_back(static_cast<int>(process_index(inputs, s, where)));
    const auto& routes = j.at("routes");
    if (!routes.is_array() || routes.size() != static_cast<std::size_t>(t.stations))
        fail(where + ".routes", "needs one route per station");
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const std::string w = where + ".routes[" + std::to_string(i + 1) + "]";
        const auto& r = routes[i];
        if (r.is_string()) {
            if (r.get<std::string>() != "exit") fail(w, "route must be \"exit\" or an object");
            t.routes.push_back(Route::exit());
        } else if (r.contains("to")) {
            check_keys(r, w, {"to"});
            const int d = destination(r.at("to"), w, t.stations);
            t.routes.push_back(d == kExit ? Route::exit() : Route::fixed(d));
        } else {
            check_keys(r, w, {"process", "success", "failure"});
            const auto p = static_cast<int>(process_index(inputs, get<std::string>(r, "process", w), w));
            t.routes.push_back(Route::bernoulli(p, destination(r.at("success"), w + ".success", t.stations),
                                                destination(r.at("failure"), w + ".failure", t.stations)));
        }
    }
    return t;
}

std::vector<InputSpec> default_inputs() {
    const auto truth = default_true_models();
    std::vector<InputSpec> out;
    for (std::size_t i = 0; i < truth.size(); ++i) out.push_back({truth.labels[i], truth.models[i], 500, {}});
    return out;
}

}  // namespace

Preset preset_from_string(std::string_view name) {
    if (name == "desk") return Preset::Desk;
    if (name == "paper") return Preset::Paper;
    if (name.empty() || name == "none") return Preset::None;
    throw Error(ErrorCode::ConfigError, "unknown preset '" + std::string(name) + "' (expected desk or paper)");
}

InputModelSet RunConfig::truth() const {
    InputModelSet set;
    for (const auto& in : inputs) {
        set.labels.push_back(in.label);
        set.models.push_back(in.model);
    }
    return set;
}

ExperimentSetup RunConfig::setup() const {
    ExperimentSetup s;
    s.topology = topology;
    s.truth = truth();
    s.protocol = protocol;
    if (loaded_start) s.protocol.initial = loaded_start_counts();
    s.uq = uq;
    s.uq.seed = seed;
    s.workers = workers;
    return s;
}

std::vector<int> RunConfig::loaded_start_counts() const {
    const auto t = truth();
    return skboot::loaded_start(topology, t.layout(), t.moments());
}

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    uq.seed = s;
    grid.seed = s;
}

void RunConfig::apply(Preset preset) {
    switch (preset) {
        case Preset::None:
            return;
        case Preset::Desk:
            grid.m_levels = {500, 5000};
            grid.k_levels = {20, 40};
            grid.n_levels = {10, 50};
            grid.R = 200;
            uq.B = 500;
            pu = {{50, 500, 5000}, 200};
            sensitivity = {{500, 40, 50}, 100};
            return;
        case Preset::Paper:
            grid.m_levels = {50, 500, 5000};
            grid.k_levels = {20, 40, 80, 130};
            grid.n_levels = {10, 50, 100};
            grid.R = 1000;
            uq.B = 2000;
            pu = {{50, 500, 5000}, 1000};
            sensitivity = {{500, 40, 50}, 1000};
            return;
    }
}

void RunConfig::validate() const {
    try {
        SKBOOT_REQUIRE(!inputs.empty(), ErrorCode::ConfigError, "no input processes");
        for (std::size_t i = 0; i < inputs.size(); ++i)
            for (std::size_t j = i + 1; j < inputs.size(); ++j)
                SKBOOT_REQUIRE(inputs[i].label != inputs[j].label, ErrorCode::ConfigError,
                               "duplicate input label '" + inputs[i].label + "'");
        const auto layout = truth().layout();
        skboot::validate(topology, layout);
        SKBOOT_REQUIRE(protocol.warmup >= 0.0 && protocol.run_length > 0.0, ErrorCode::ConfigError,
                       "protocol needs warmup >= 0 and run_length > 0");
        if (!protocol.initial.empty())
            SKBOOT_REQUIRE(protocol.initial.size() == static_cast<std::size_t>(topology.stations),
                           ErrorCode::ConfigError, "protocol.initial needs one count per station");
        for (int c : protocol.initial) SKBOOT_REQUIRE(c >= 0, ErrorCode::ConfigError, "negative initial count");
        uq.validate();
        grid.validate();
        SKBOOT_REQUIRE(sensitivity.cell.m >= 2 && sensitivity.cell.n >= 2 && sensitivity.R >= 1,
                       ErrorCode::ConfigError, "sensitivity cell needs m >= 2, n >= 2, R >= 1");
        for (auto m : pu.m_levels) SKBOOT_REQUIRE(m >= 2, ErrorCode::ConfigError, "pu.m levels must be >= 2");
        if (oracle_x)
            SKBOOT_REQUIRE(static_cast<std::size_t>(oracle_x->size()) == layout.dim(), ErrorCode::ConfigError,
                           "oracle.x has the wrong dimension");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"inputs", "topology", "protocol", "uq", "grid", "pu", "sensitivity", "seed", "out_dir", "workers",
                "tag", "oracle"});
    RunConfig c;

    if (j.contains("inputs")) {
        const auto& arr = j.at("inputs");
        if (!arr.is_array() || arr.empty()) fail("inputs", "must be a non-empty list");
        for (std::size_t i = 0; i < arr.size(); ++i)
            c.inputs.push_back(parse_input(arr[i], "inputs[" + std::to_string(i + 1) + "]", base_dir));
    } else {
        c.inputs = default_inputs();
    }

    c.topology = j.contains("topology") ? parse_topology(j.at("topology"), c.inputs) : default_topology();

    if (j.contains("protocol")) {
        const auto& p = j.at("protocol");
        check_keys(p, "protocol", {"warmup", "run_length", "initial"});
        maybe(p, "warmup", "protocol", c.protocol.warmup);
        maybe(p, "run_length", "protocol", c.protocol.run_length);
        if (p.contains("initial")) {
            const auto& init = p.at("initial");
            if (init.is_string()) {
                const auto s = init.get<std::string>();
                if (s == "loaded")
                    c.loaded_start = true;
                else if (s == "empty")
                    c.loaded_start = false;
                else
                    fail("protocol.initial", "expected \"loaded\", \"empty\" or a list of counts");
            } else {
                c.loaded_start = false;
                c.protocol.initial = get<std::vector<int>>(p, "initial", "protocol");
            }
        }
    }

    if (j.contains("uq")) {
        const auto& u = j.at("uq");
        const std::string w = "uq";
        check_keys(u, w,
                   {"alpha", "B", "k", "N", "reject_undefined", "q", "alpha_I", "power", "p1", "B0", "max_design_iters",
                    "starts", "max_iters"});
        maybe(u, "alpha", w, c.uq.alpha);
        maybe_size(u, "B", w, c.uq.B);
        maybe_size(u, "k", w, c.uq.k);
        maybe_size(u, "N", w, c.uq.N);
        maybe(u, "reject_undefined", w, c.uq.reject_undefined);
        maybe(u, "q", w, c.uq.design.q);
        maybe(u, "alpha_I", w, c.uq.design.alpha_I);
        maybe(u, "power", w, c.uq.design.power);
        maybe(u, "p1", w, c.uq.design.p1);
        maybe_size(u, "B0", w, c.uq.design.B0);
        maybe(u, "max_design_iters", w, c.uq.design.max_iters);
        maybe(u, "starts", w, c.uq.sk.starts);
        maybe(u, "max_iters", w, c.uq.sk.max_iters);
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "grid", {"m", "k", "n", "R"});
        if (g.contains("m")) c.grid.m_levels = size_list(g, "m", "grid");
        if (g.contains("k")) c.grid.k_levels = size_list(g, "k", "grid");
        if (g.contains("n")) {
            c.grid.n_levels.clear();
            for (auto n : size_list(g, "n", "grid")) c.grid.n_levels.push_back(static_cast<int>(n));
        }
        maybe_size(g, "R", "grid", c.grid.R);
    }

    if (j.contains("pu")) {
        const auto& p = j.at("pu");
        check_keys(p, "pu", {"m", "R"});
        if (p.contains("m")) c.pu.m_levels = size_list(p, "m", "pu");
        maybe_size(p, "R", "pu", c.pu.R);
    }

    if (j.contains("sensitivity")) {
        const auto& s = j.at("sensitivity");
        check_keys(s, "sensitivity", {"m", "k", "n", "R"});
        maybe_size(s, "m", "sensitivity", c.sensitivity.cell.m);
        maybe_size(s, "k", "sensitivity", c.sensitivity.cell.k);
        if (s.contains("n")) c.sensitivity.cell.n = static_cast<int>(positive_size(s, "n", "sensitivity"));
        maybe_size(s, "R", "sensitivity", c.sensitivity.R);
    }

    if (j.contains("seed")) c.set_seed(get<std::uint64_t>(j, "seed", "config"));
    else c.set_seed(c.seed);
    if (j.contains("out_dir")) c.out_dir = get<std::string>(j, "out_dir", "config");
    if (j.contains("workers")) c.workers = static_cast<unsigned>(positive_size(j, "workers", "config"));
    maybe(j, "tag", "config", c.tag);

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_keys(o, "oracle", {"x"});
        const auto x = get<std::vector<double>>(o, "x", "oracle");
        c.oracle_x = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    }

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

}  // namespace skboot
