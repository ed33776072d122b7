#pragma once

#include "varnews/common.hpp"
#include "varnews/distributions.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace varnews::vol {

enum class Dynamics { Garch, Egarch, Gjr };

/// Covariate sets entering the variance equation: none, information volume (NUMB, LAGVOL),
/// and sentiment (POS, NEG, HIGH).
enum class RegressorKind { None, InfoVolume, Sentiment };

[[nodiscard]] std::string_view to_string(Dynamics d);
[[nodiscard]] std::string_view to_string(RegressorKind r);
[[nodiscard]] Dynamics dynamics_from_string(std::string_view s);
[[nodiscard]] RegressorKind regressor_kind_from_string(std::string_view s);
[[nodiscard]] std::size_t regressor_columns(RegressorKind r) noexcept;

/// Identity of one competing model.
struct ModelSpec {
    Dynamics dynamics = Dynamics::Garch;
    dist::LawKind law = dist::LawKind::Gaussian;
    RegressorKind regressors = RegressorKind::None;

    /// e.g. "GJR-T-IV"
    [[nodiscard]] std::string id() const;
    bool operator==(const ModelSpec&) const = default;
};

/// AR(1) mean, variance dynamics, covariate loadings and shape. `gamma` is unused by GARCH;
/// `shape` is unused by the Gaussian law.
struct ParamVector {
    double mu = 0.0;
    double phi = 0.0;
    double omega = 0.0;
    std::vector<double> delta;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double shape = 0.0;

    bool operator==(const ParamVector&) const = default;
};

[[nodiscard]] dist::ErrorLaw law_of(dist::LawKind kind, const ParamVector& p);

/// Empty string when admissible, otherwise a description of the first violated constraint.
[[nodiscard]] std::string constraint_violation(Dynamics dynamics, const dist::ErrorLaw& law,
                                               const ParamVector& p, std::size_t regressor_cols);
void validate_params(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                     std::size_t regressor_cols);

/// Number of free parameters: mu, phi, omega, delta, alpha, beta, [gamma], [shape].
[[nodiscard]] std::size_t free_parameter_count(Dynamics dynamics, dist::LawKind law, std::size_t regressor_cols);

/// Pre-sample conditions of the recursion.
struct FilterInit {
    double pre_sample_return = 0.0;  // r_0
    double initial_sigma2 = 1.0;     // sigma^2_1
};

/// r_0 = sample mean, sigma^2_1 = population variance of `returns`.
[[nodiscard]] FilterInit default_init(std::span<const double> returns);

struct FilterOutput {
    std::vector<double> sigma2;
    std::vector<double> eps;
    std::vector<double> z;
};

/// One step of the variance recursion: sigma^2_t from eps_{t-1}, sigma^2_{t-1} and x_t (already
/// scaled). `abs_moment` is E|z| of the law and only matters for EGARCH.
[[nodiscard]] double next_variance(Dynamics dynamics, const ParamVector& p, double abs_moment, double eps_prev,
                                   double sigma2_prev, std::span<const double> x) noexcept;

/// Runs the AR(1) mean and variance recursion over `returns`. `regressors` has one row per return
/// and one column per covariate, or zero columns. Throws ValidationError on a constraint violation
/// and NumericalError on a non-finite intermediate.
[[nodiscard]] FilterOutput filter(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                  std::span<const double> returns, const Matrix& regressors);
[[nodiscard]] FilterOutput filter(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                  std::span<const double> returns, const Matrix& regressors,
                                  const FilterInit& init);

/// Sum over t of log f(z_t) - ln(sigma_t^2)/2. Throws like `filter`.
[[nodiscard]] double log_likelihood(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                    std::span<const double> returns, const Matrix& regressors);

/// Penalty path for optimizers: -infinity for inadmissible parameters or a non-finite recursion.
[[nodiscard]] double log_likelihood_or_infeasible(Dynamics dynamics, const dist::ErrorLaw& law,
                                                  const ParamVector& p, std::span<const double> returns,
                                                  const Matrix& regressors, const FilterInit& init) noexcept;

/// Draws n returns from the model. The recursion starts at the unconditional mean and variance and
/// runs a 500-step burn-in with zero covariates, which is discarded.
[[nodiscard]] std::vector<double> simulate(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                           std::size_t n, std::uint64_t seed, const Matrix& regressors);

/// Unconditional variance implied by the dynamics with zero covariates.
[[nodiscard]] double unconditional_variance(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p);

}  // namespace varnews::vol
