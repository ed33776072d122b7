#pragma once

#include "varnews/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace varnews::comb {

/// Row means of a time x model VaR matrix.
[[nodiscard]] std::vector<double> static_average(const Matrix& var);

/// softmax_j(sign * loss(r, var_j) / sigma_j), computed after subtracting the largest exponent.
[[nodiscard]] std::vector<double> normalized_kernel(double r, std::span<const double> var_row,
                                                    std::span<const double> sigma_row, double tau, double sign);

struct WeightSeries {
    Matrix weights;  // time x model; row t weights the forecasts for time t
    std::vector<double> kappa;
};

/// Row 0 is uniform. Row t+1 = kappa * row t + (1 - kappa) * kernel(realized[t], var[t], sqrt(sigma2_hat[t])),
/// elementwise in the model index, then rescaled to sum to one.
[[nodiscard]] WeightSeries dynamic_weights(const Matrix& var, std::span<const double> realized, const Matrix& sigma2_hat,
                                           std::span<const double> kappa, double tau, double sign);

/// Rowwise sum_j w_j var_j, clamped to the rowwise [min, max] of var to absorb rounding.
[[nodiscard]] std::vector<double> combine(const Matrix& var, const Matrix& weights);

/// Mean pinball loss of a VaR series.
[[nodiscard]] double average_loss(std::span<const double> realized, std::span<const double> var, double tau);

struct KappaOptions {
    double epsilon = 1e-4;
    std::vector<double> start_levels{0.5, 0.9, 0.99};
    int max_iterations = 2000;
    unsigned threads = 1;
};

struct KappaFit {
    std::vector<double> kappa;
    double loss = 0.0;
    bool converged = false;
};

/// Minimizes the average loss of the dynamic combination over kappa in (eps, 1 - eps)^m by simplex
/// search in logit coordinates, starting from kappa = c for every c in `start_levels`.
[[nodiscard]] KappaFit optimize_kappa(const Matrix& var, std::span<const double> realized, const Matrix& sigma2_hat,
                                      double tau, double sign, const KappaOptions& options = {});

}  // namespace varnews::comb
