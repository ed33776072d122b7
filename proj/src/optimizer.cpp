#include "varnews/optimizer.hpp"

#include "varnews/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace varnews::opt {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0) throw ValidationError("nelder_mead: empty starting point");
    const double dn = static_cast<double>(n);
    const double reflect = 1.0;
    const double expand = n >= 2 ? 1.0 + 2.0 / dn : 2.0;
    const double contract = n >= 2 ? 0.75 - 1.0 / (2.0 * dn) : 0.5;
    const double shrink = n >= 2 ? 1.0 - 1.0 / dn : 0.5;

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    if (!options.steps.empty() && options.steps.size() != n) {
        throw ValidationError("nelder_mead: steps and starting point differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += options.steps.empty() ? options.initial_step : options.steps[i];
    }
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];
        result.trace.push_back(values[best]);

        double spread = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
        }
        const double f_gap = values[worst] - values[best];
        if (std::isfinite(values[best]) && f_gap <= options.f_tolerance * (std::abs(values[best]) + 1e-12) &&
            spread <= options.x_tolerance) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / dn;
        }
        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + reflect * (centroid[j] - simplex[worst][j]);
        const double f_reflect = eval(trial);

        if (f_reflect < values[best]) {
            for (std::size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + expand * (trial[j] - centroid[j]);
            const double f_expand = eval(trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                values[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                values[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = f_reflect;
            continue;
        }
        const bool outside = f_reflect < values[worst];
        for (std::size_t j = 0; j < n; ++j) {
            trial2[j] = outside ? centroid[j] + contract * (trial[j] - centroid[j])
                                : centroid[j] - contract * (centroid[j] - simplex[worst][j]);
        }
        const double f_contract = eval(trial2);
        if (f_contract < (outside ? f_reflect : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = f_contract;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + shrink * (simplex[i][j] - simplex[best][j]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best = static_cast<std::size_t>(best_it - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace varnews::opt
