#pragma once

#include "varnews/common.hpp"
#include "varnews/volatility.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace varnews::est {

struct FitConfig {
    int max_iterations = 4000;  // simplex iterations per start
    double tolerance = 1e-8;    // relative log-likelihood change
    int starts = 2;
    std::uint64_t seed = 1;
    std::size_t min_obs = 100;
    /// Replaces the canonical start when set and admissible (warm start for refits).
    std::optional<vol::ParamVector> initial;
};

struct FittedModel {
    vol::ModelSpec spec;
    vol::ParamVector params;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;
    /// Covariates are divided by these before entering the variance equation.
    std::vector<double> regressor_scales;
    /// Pre-sample conditions used on the estimation window.
    vol::FilterInit init;
    bool converged = false;
    /// Best log-likelihood per simplex iteration of the winning start.
    std::vector<double> trace;
    /// Log-likelihood at the canonical start and each perturbed start.
    std::vector<double> start_logliks;
};

/// Smooth bijection from the admissible set onto R^k. Layout:
/// [mu, atanh(phi), omega*, delta*..., dynamics coordinates..., shape*].
[[nodiscard]] std::vector<double> to_unconstrained(const vol::ParamVector& p, vol::Dynamics dynamics,
                                                   dist::LawKind law);
[[nodiscard]] vol::ParamVector from_unconstrained(std::span<const double> theta, vol::Dynamics dynamics,
                                                  dist::LawKind law, std::size_t regressor_cols);

/// mu = mean, phi = lag-1 autocorrelation clamped to (-0.5, 0.5), omega = 0.05 var
/// (EGARCH: ln(var)(1-beta)), alpha = 0.05, beta = 0.90, gamma = 0.05, delta ~ 0,
/// shape = 1.5 (GED) or 8 (Student-t).
[[nodiscard]] vol::ParamVector canonical_start(vol::Dynamics dynamics, dist::LawKind law,
                                               std::span<const double> returns, std::size_t regressor_cols);

/// Population standard deviation of each column; 1 for constant columns.
[[nodiscard]] std::vector<double> column_scales(const Matrix& regressors);
[[nodiscard]] Matrix scale_columns(const Matrix& regressors, std::span<const double> scales);

[[nodiscard]] double aic(double loglik, std::size_t k);
[[nodiscard]] double bic(double loglik, std::size_t k, std::size_t n_obs);

/// Maximum likelihood by multi-start simplex search on the unconstrained parameterization.
/// `regressors` are raw covariates (one row per return); scaling is applied internally.
/// Throws ValidationError for too-short or zero-variance data and NumericalError when every
/// start is infeasible.
[[nodiscard]] FittedModel fit(const vol::ModelSpec& spec, std::span<const double> returns, const Matrix& regressors,
                              const FitConfig& config);

}  // namespace varnews::est
