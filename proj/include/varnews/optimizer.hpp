#pragma once

#include <functional>
#include <span>
#include <vector>

namespace varnews::opt {

struct NelderMeadOptions {
    int max_iterations = 5000;
    /// Stop when (f_worst - f_best) <= f_tolerance * (|f_best| + 1e-12) ...
    double f_tolerance = 1e-8;
    /// ... and every vertex lies within x_tolerance of the best one (max-norm).
    double x_tolerance = 1e-6;
    double initial_step = 0.25;
    /// Per-coordinate initial simplex steps; overrides `initial_step` when non-empty.
    std::vector<double> steps;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    /// Best objective value after each iteration; never increases.
    std::vector<double> trace;
};

/// Minimizes `f` with the adaptive Nelder-Mead simplex (dimension-dependent coefficients of
/// Gao and Han). Non-finite objective values are treated as +infinity.
[[nodiscard]] NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                                           std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace varnews::opt
