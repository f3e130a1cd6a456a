#include "skboot/queueing.hpp"

#include "skboot/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace skboot {

void validate(const NetworkTopology& t, const MomentLayout& layout) {
    SKBOOT_REQUIRE(t.stations >= 1, ErrorCode::InvalidArgument, "network needs at least one station");
    SKBOOT_REQUIRE(t.arrival_station >= 0 && t.arrival_station < t.stations, ErrorCode::InvalidArgument,
                   "arrival station out of range");
    SKBOOT_REQUIRE(static_cast<int>(t.service_process.size()) == t.stations &&
                       static_cast<int>(t.routes.size()) == t.stations,
                   ErrorCode::InvalidArgument, "service processes and routes must be given for every station");
    const int L = static_cast<int>(layout.processes());
    auto require_family = [&](int process, Family f, const std::string& what) {
        SKBOOT_REQUIRE(process >= 0 && process < L, ErrorCode::LayoutMismatch, what + " refers to a missing process");
        SKBOOT_REQUIRE(layout.family(static_cast<std::size_t>(process)) == f, ErrorCode::LayoutMismatch,
                       what + " must be a " + std::string(to_string(f)) + " process");
    };
    if (t.arrival_process >= 0) require_family(t.arrival_process, Family::Gamma, "arrival process");
    auto valid_dest = [&](int dest) { return dest == kExit || (dest >= 0 && dest < t.stations); };
    for (int i = 0; i < t.stations; ++i) {
        const auto label = "station " + std::to_string(i + 1);
        require_family(t.service_process[static_cast<std::size_t>(i)], Family::Gamma, label + " service");
        const Route& r = t.routes[static_cast<std::size_t>(i)];
        if (r.kind == Route::Kind::Bernoulli) require_family(r.process, Family::Bernoulli, label + " routing");
        SKBOOT_REQUIRE(valid_dest(r.on_success) && valid_dest(r.on_failure), ErrorCode::InvalidArgument,
                       label + " routes to a station out of range");
    }
}

NetworkTopology default_topology() {
    NetworkTopology t;
    t.stations = 4;
    t.arrival_station = 0;
    t.arrival_process = 0;
    t.service_process = {1, 2, 3, 4};
    t.routes = {Route::bernoulli(5, 1, 2), Route::bernoulli(6, 2, 3), Route::bernoulli(7, 3, 2), Route::exit()};
    return t;
}

InputModelSet default_true_models() {
    InputModelSet s;
    s.labels = {"arrival", "service1", "service2", "service3", "service4", "route1", "route2", "route3"};
    s.models = {InputDistribution::gamma(1.0, 0.25), InputDistribution::gamma(1.0, 0.2),
                InputDistribution::gamma(1.0, 0.2),  InputDistribution::gamma(1.0, 0.2),
                InputDistribution::gamma(1.0, 0.2),  InputDistribution::bernoulli(0.5),
                InputDistribution::bernoulli(0.5),   InputDistribution::bernoulli(0.75)};
    return s;
}

NetworkTopology single_station_topology() {
    NetworkTopology t;
    t.stations = 1;
    t.arrival_station = 0;
    t.arrival_process = 0;
    t.service_process = {1};
    t.routes = {Route::exit()};
    return t;
}

void PathIntegrator::advance(double t) {
    const double lo = std::max(last_, begin_);
    const double hi = std::min(t, end_);
    if (hi > lo) area_ += static_cast<double>(count_) * (hi - lo);
    last_ = std::max(last_, t);
}

void PathIntegrator::jump(double t, long delta) {
    advance(t);
    count_ += delta;
}

double PathIntegrator::time_average() {
    advance(end_);
    return area_ / (end_ - begin_);
}

namespace {

class GammaSampler {
public:
    explicit GammaSampler(const InputDistribution& d) : dist_(d.shape(), d.scale()) {}
    double operator()(Rng& rng) { return dist_(rng); }

private:
    std::gamma_distribution<double> dist_;
};

}  // namespace

double simulate(const NetworkTopology& topology, const InputModelSet& models, const SimProtocol& protocol, Rng& rng,
                std::ostream* trace) {
    SKBOOT_REQUIRE(protocol.warmup >= 0.0 && protocol.run_length > 0.0, ErrorCode::InvalidArgument,
                   "protocol needs warmup >= 0 and run length > 0");
    const int J = topology.stations;
    SKBOOT_REQUIRE(protocol.initial.empty() || static_cast<int>(protocol.initial.size()) == J,
                   ErrorCode::InvalidArgument, "initial state needs one count per station");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const double horizon = protocol.warmup + protocol.run_length;
    if (trace) trace->precision(17);

    std::optional<GammaSampler> arrivals;
    if (topology.arrival_process >= 0)
        arrivals.emplace(models.models.at(static_cast<std::size_t>(topology.arrival_process)));
    std::vector<GammaSampler> service;
    std::vector<std::bernoulli_distribution> routing;
    service.reserve(static_cast<std::size_t>(J));
    routing.reserve(static_cast<std::size_t>(J));
    for (int i = 0; i < J; ++i) {
        service.emplace_back(models.models.at(static_cast<std::size_t>(topology.service_process[static_cast<std::size_t>(i)])));
        const Route& r = topology.routes[static_cast<std::size_t>(i)];
        double p = 0.5;
        if (r.kind == Route::Kind::Bernoulli)
            p = std::clamp(models.models.at(static_cast<std::size_t>(r.process)).probability(), kBernoulliClamp,
                           1.0 - kBernoulliClamp);
        routing.emplace_back(p);
    }

    std::vector<long> count(static_cast<std::size_t>(J), 0);
    std::vector<double> next_departure(static_cast<std::size_t>(J), kInf);
    long in_system = 0;
    for (int i = 0; i < J; ++i) {
        const long c = protocol.initial.empty() ? 0 : protocol.initial[static_cast<std::size_t>(i)];
        SKBOOT_REQUIRE(c >= 0, ErrorCode::InvalidArgument, "initial counts must be non-negative");
        count[static_cast<std::size_t>(i)] = c;
        in_system += c;
    }
    // One stream per input process and station, so that changing one input
    // leaves the draws of every other input untouched.
    const std::uint64_t base = rng();
    Rng arrival_rng(derive_seed(base, {0}));
    std::vector<Rng> service_rng, routing_rng;
    for (int i = 0; i < J; ++i) {
        service_rng.emplace_back(derive_seed(base, {1, static_cast<std::uint64_t>(i)}));
        routing_rng.emplace_back(derive_seed(base, {2, static_cast<std::uint64_t>(i)}));
    }
    auto serve = [&](std::size_t i) { return service[i](service_rng[i]); };

    for (int i = 0; i < J; ++i)
        if (count[static_cast<std::size_t>(i)] > 0)
            next_departure[static_cast<std::size_t>(i)] = serve(static_cast<std::size_t>(i));
    double next_arrival = arrivals ? (*arrivals)(arrival_rng) : kInf;

    PathIntegrator path(protocol.warmup, horizon, in_system);
    auto log = [&](double t, const char* what, int station) {
        if (trace) *trace << t << ',' << what << ',' << station + 1 << ',' << path.count() << '\n';
    };

    while (true) {
        int dep = -1;
        double dep_time = kInf;
        for (int i = 0; i < J; ++i)
            if (next_departure[static_cast<std::size_t>(i)] < dep_time) {
                dep_time = next_departure[static_cast<std::size_t>(i)];
                dep = i;
            }
        // Departures win ties against arrivals; lower station index wins among departures.
        const bool is_departure = dep >= 0 && dep_time <= next_arrival;
        const double t = is_departure ? dep_time : next_arrival;
        if (!(t <= horizon)) break;

        if (!is_departure) {
            const auto a = static_cast<std::size_t>(topology.arrival_station);
            path.jump(t, +1);
            if (++count[a] == 1) next_departure[a] = t + serve(a);
            next_arrival = t + (*arrivals)(arrival_rng);
            log(t, "arrival", topology.arrival_station);
            continue;
        }

        const auto i = static_cast<std::size_t>(dep);
        if (--count[i] > 0) {
            next_departure[i] = t + serve(i);
        } else {
            next_departure[i] = kInf;
        }
        const Route& r = topology.routes[i];
        int dest = r.on_success;
        if (r.kind == Route::Kind::Bernoulli) dest = routing[i](routing_rng[i]) ? r.on_success : r.on_failure;
        if (dest == kExit) {
            path.jump(t, -1);
            log(t, "exit", dep);
        } else {
            const auto k = static_cast<std::size_t>(dest);
            if (++count[k] == 1) next_departure[k] = t + serve(k);
            log(t, "transfer", dep);
        }
    }
    return path.time_average();
}

PointSummary replicate(const NetworkTopology& topology, const InputModelSet& models, const SimProtocol& protocol,
                       int n, Rng& rng) {
    SKBOOT_REQUIRE(n >= 2, ErrorCode::InvalidArgument, "at least two replications are required");
    const std::uint64_t base = rng();
    double mean = 0.0;
    double m2 = 0.0;
    for (int j = 0; j < n; ++j) {
        Rng stream(derive_seed(base, static_cast<std::uint64_t>(j)));
        const double y = simulate(topology, models, protocol, stream);
        const double delta = y - mean;
        mean += delta / (j + 1);
        m2 += delta * (y - mean);
    }
    return {mean, m2 / (n - 1), n};
}

namespace {

struct RoutingGraph {
    Eigen::MatrixXd R;  // R(i, j) = P{station i routes to station j}
    Eigen::VectorXd exit_prob;
};

RoutingGraph routing_graph(const NetworkTopology& t, const MomentLayout& layout, const MomentVector& x) {
    const int J = t.stations;
    RoutingGraph g{Eigen::MatrixXd::Zero(J, J), Eigen::VectorXd::Zero(J)};
    auto add = [&](int from, int to, double p) {
        if (to == kExit)
            g.exit_prob[from] += p;
        else
            g.R(from, to) += p;
    };
    for (int i = 0; i < J; ++i) {
        const Route& r = t.routes[static_cast<std::size_t>(i)];
        switch (r.kind) {
            case Route::Kind::Exit: add(i, kExit, 1.0); break;
            case Route::Kind::Fixed: add(i, r.on_success, 1.0); break;
            case Route::Kind::Bernoulli: {
                const double p = x[static_cast<Eigen::Index>(layout.offset(static_cast<std::size_t>(r.process)))];
                SKBOOT_REQUIRE(p >= 0.0 && p <= 1.0, ErrorCode::InvalidMoment,
                               "routing probability outside [0,1]");
                add(i, r.on_success, p);
                add(i, r.on_failure, 1.0 - p);
                break;
            }
        }
    }
    return g;
}

std::vector<bool> reachable_from_arrivals(const NetworkTopology& t, const RoutingGraph& g) {
    std::vector<bool> seen(static_cast<std::size_t>(t.stations), false);
    std::vector<int> stack{t.arrival_station};
    seen[static_cast<std::size_t>(t.arrival_station)] = true;
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < t.stations; ++j)
            if (g.R(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
    }
    return seen;
}

std::vector<bool> can_exit(const NetworkTopology& t, const RoutingGraph& g) {
    std::vector<bool> ok(static_cast<std::size_t>(t.stations), false);
    std::vector<int> stack;
    for (int i = 0; i < t.stations; ++i)
        if (g.exit_prob[i] > 0.0) {
            ok[static_cast<std::size_t>(i)] = true;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        for (int i = 0; i < t.stations; ++i)
            if (g.R(i, j) > 0.0 && !ok[static_cast<std::size_t>(i)]) {
                ok[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
    }
    return ok;
}

double block_mean(const MomentLayout& layout, const MomentVector& x, int process) {
    return x[static_cast<Eigen::Index>(layout.offset(static_cast<std::size_t>(process)))];
}

}  // namespace

JacksonSolution jackson_oracle(const NetworkTopology& t, const MomentLayout& layout, const MomentVector& x) {
    validate(t, layout);
    SKBOOT_REQUIRE(static_cast<std::size_t>(x.size()) == layout.dim(), ErrorCode::LayoutMismatch,
                   "moment vector dimension does not match layout");
    const auto g = routing_graph(t, layout, x);
    const auto reach = reachable_from_arrivals(t, g);

    // Only stations fed by external arrivals carry traffic; the solve is
    // restricted to them so that an unreachable absorbing loop is irrelevant.
    std::vector<int> active;
    for (int i = 0; i < t.stations; ++i)
        if (reach[static_cast<std::size_t>(i)]) active.push_back(i);
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd ext = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) A(a, b) -= g.R(active[static_cast<std::size_t>(b)], active[static_cast<std::size_t>(a)]);
    double arrival_rate = 0.0;
    if (t.arrival_process >= 0) {
        const double mean = block_mean(layout, x, t.arrival_process);
        SKBOOT_REQUIRE(mean > 0.0, ErrorCode::InvalidMoment, "mean interarrival time must be positive");
        arrival_rate = 1.0 / mean;
    }
    for (Eigen::Index a = 0; a < n; ++a)
        if (active[static_cast<std::size_t>(a)] == t.arrival_station) ext[a] = arrival_rate;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        throw Error(ErrorCode::SingularTraffic, "traffic equations are singular (customers can be trapped)");
    const Eigen::VectorXd lam_active = lu.solve(ext);

    JacksonSolution sol;
    sol.arrival_rate = Eigen::VectorXd::Zero(t.stations);
    sol.utilization = Eigen::VectorXd::Zero(t.stations);
    for (Eigen::Index a = 0; a < n; ++a) sol.arrival_rate[active[static_cast<std::size_t>(a)]] = std::max(0.0, lam_active[a]);
    sol.stable = true;
    sol.in_system = 0.0;
    for (int i = 0; i < t.stations; ++i) {
        const double service_mean = block_mean(layout, x, t.service_process[static_cast<std::size_t>(i)]);
        SKBOOT_REQUIRE(service_mean > 0.0, ErrorCode::InvalidMoment, "mean service time must be positive");
        const double rho = sol.arrival_rate[i] * service_mean;
        sol.utilization[i] = rho;
        if (rho >= 1.0) {
            sol.stable = false;
        } else {
            sol.in_system += rho / (1.0 - rho);
        }
    }
    if (!sol.stable) sol.in_system = std::numeric_limits<double>::infinity();
    return sol;
}

bool is_defined(const NetworkTopology& t, const MomentLayout& layout, const MomentVector& x) {
    const auto g = routing_graph(t, layout, x);
    const auto reach = reachable_from_arrivals(t, g);
    const auto exits = can_exit(t, g);
    for (int i = 0; i < t.stations; ++i)
        if (reach[static_cast<std::size_t>(i)] && !exits[static_cast<std::size_t>(i)]) return false;
    return true;
}

bool is_unstable(const NetworkTopology& t, const MomentLayout& layout, const MomentVector& x) {
    return !jackson_oracle(t, layout, x).stable;
}

std::vector<int> loaded_start(const NetworkTopology& t, const MomentLayout& layout, const MomentVector& x) {
    const auto sol = jackson_oracle(t, layout, x);
    SKBOOT_REQUIRE(sol.stable, ErrorCode::InvalidArgument, "loaded start requires a stable network");
    std::vector<int> out(static_cast<std::size_t>(t.stations));
    for (int i = 0; i < t.stations; ++i) {
        const double rho = sol.utilization[i];
        out[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(rho / (1.0 - rho)));
    }
    return out;
}

}  // namespace skboot
