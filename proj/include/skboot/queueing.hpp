#pragma once

// Open network of single-server FIFO stations with gamma interarrival and
// service times and Bernoulli routing, plus the exponential-case (Jackson)
// analytic oracle used as ground truth.

#include "skboot/input_models.hpp"
#include "skboot/rng.hpp"
#include "skboot/sk.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace skboot {

inline constexpr int kExit = -1;

struct Route {
    enum class Kind { Exit, Fixed, Bernoulli };
    Kind kind = Kind::Exit;
    int process = -1;      // Bernoulli input process (Kind::Bernoulli)
    int on_success = kExit;  // destination on a 1 draw, or the fixed destination
    int on_failure = kExit;  // destination on a 0 draw

    static Route exit() { return {}; }
    static Route fixed(int dest) { return {Kind::Fixed, -1, dest, dest}; }
    static Route bernoulli(int process, int on_success, int on_failure) {
        return {Kind::Bernoulli, process, on_success, on_failure};
    }
};

/// Stations are 0-based here; configuration files and reports use 1-based numbers.
struct NetworkTopology {
    int stations = 0;
    int arrival_station = 0;
    int arrival_process = 0;
    std::vector<int> service_process;  // per station
    std::vector<Route> routes;         // per station
};

/// Throws InvalidArgument / LayoutMismatch if the topology references
/// processes of the wrong family or stations out of range.
void validate(const NetworkTopology& topology, const MomentLayout& layout);

/// Four-station test network driven by eight input processes
/// (arrival, service1..4, route1..3):
///   arrivals -> 1;  1 -> 2 w.p. p1, else 3;  2 -> 3 w.p. p2, else 4;
///   3 -> 4 w.p. p3, else back to 3;  4 -> exit.
NetworkTopology default_topology();
/// True input models of the test network: exponential arrivals with mean 0.25,
/// exponential services with mean 0.2, routing (0.5, 0.5, 0.75).
InputModelSet default_true_models();

/// Single M/M/1-style station (arrival process 0, service process 1).
NetworkTopology single_station_topology();

struct SimProtocol {
    double warmup = 200.0;
    double run_length = 20.0;
    std::vector<int> initial;  // customers at each station at time 0; empty = idle
};

/// Accumulates the integral of a piecewise-constant count over [begin, end].
class PathIntegrator {
public:
    PathIntegrator(double begin, double end, long initial_count)
        : begin_(begin), end_(end), count_(initial_count) {}

    /// The count changes by `delta` at time t (t non-decreasing).
    void jump(double t, long delta);
    /// Integral over the window divided by its length; closes the path at `end`.
    [[nodiscard]] double time_average();
    [[nodiscard]] long count() const noexcept { return count_; }

private:
    void advance(double t);
    double begin_;
    double end_;
    double last_ = 0.0;
    long count_;
    double area_ = 0.0;
};

/// One replication: time-average number in system over [warmup, warmup + run_length].
/// A single draw of `rng` seeds separate streams for arrivals, each station's
/// services and each station's routing decisions. When `trace` is given, every
/// event is written as CSV: time,event,station,in_system.
double simulate(const NetworkTopology& topology, const InputModelSet& models, const SimProtocol& protocol, Rng& rng,
                std::ostream* trace = nullptr);

/// n independent replications (stream j seeded from one draw of rng); sample
/// mean and variance with divisor n - 1.
PointSummary replicate(const NetworkTopology& topology, const InputModelSet& models, const SimProtocol& protocol,
                       int n, Rng& rng);

struct JacksonSolution {
    Eigen::VectorXd arrival_rate;  // lambda per station
    Eigen::VectorXd utilization;   // rho per station
    bool stable = false;
    double in_system = 0.0;        // sum rho / (1 - rho); +inf when unstable
    [[nodiscard]] double max_utilization() const { return utilization.maxCoeff(); }
};

/// Traffic equations lambda = a + R' lambda with exponential-equivalent rates
/// 1 / mean. Throws SingularTraffic if (I - R') is singular.
JacksonSolution jackson_oracle(const NetworkTopology& topology, const MomentLayout& layout, const MomentVector& x);

/// Every station reachable from the arrival station under strictly positive
/// routing probabilities can reach the exit.
bool is_defined(const NetworkTopology& topology, const MomentLayout& layout, const MomentVector& x);

/// Some station has rho >= 1 (same traffic solve as jackson_oracle).
bool is_unstable(const NetworkTopology& topology, const MomentLayout& layout, const MomentVector& x);

/// Rounded steady-state mean counts rho / (1 - rho) at x.
std::vector<int> loaded_start(const NetworkTopology& topology, const MomentLayout& layout, const MomentVector& x);

}  // namespace skboot
