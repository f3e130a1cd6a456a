#include "skboot/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace skboot {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const NelderMeadOptions& opts) {
    const Eigen::Index n = x0.size();
    NelderMeadResult res;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
    std::vector<double> values(static_cast<std::size_t>(n + 1));
    for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += step[i];
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    Eigen::VectorXd centroid(n);
    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];

        const double spread = values[worst] - values[best];
        if (std::isfinite(values[best]) && std::isfinite(values[worst]) && spread < opts.ftol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= opts.max_iters) break;
        ++res.iterations;

        centroid.setZero();
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = eval(reflected);
        if (fr < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection improved on the worst point, inside otherwise.
        const bool outside = fr < values[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    res.x = simplex[best];
    res.value = values[best];
    return res;
}

}  // namespace skboot
