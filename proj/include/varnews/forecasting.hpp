#pragma once

#include "varnews/common.hpp"
#include "varnews/estimation.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace varnews::fc {

/// Last filtered values needed to advance the recursion by one step.
struct FilterState {
    double last_return = 0.0;
    double last_eps = 0.0;
    double last_sigma2 = 1.0;
};

struct OneStep {
    double mu = 0.0;
    double sigma2 = 1.0;
};

/// Filters `returns` (raw covariates, scaled with the fitted factors) from the fitted pre-sample
/// conditions and returns the state after the final observation.
[[nodiscard]] FilterState filter_state(const est::FittedModel& fitted, std::span<const double> returns,
                                       const Matrix& regressors);

/// Mean mu + phi r_t and variance sigma^2_{t+1}. `x_next` is the raw covariate row of t+1.
[[nodiscard]] OneStep forecast_one_step(const est::FittedModel& fitted, const FilterState& state,
                                        std::span<const double> x_next);

/// State after observing `realized` at the forecast step.
[[nodiscard]] FilterState advance(const OneStep& forecast, double realized);

[[nodiscard]] double var_forecast(double mu, double sigma2, const dist::ErrorLaw& law, double tau);

/// One-step-ahead VaR forecasts of several models at one confidence level.
struct VaRPanel {
    double tau = 0.01;
    std::vector<std::int64_t> timestamps;
    std::vector<double> realized;
    std::vector<std::string> model_ids;
    Matrix var;         // time x model
    Matrix sigma2_hat;  // time x model

    /// Keeps only the named columns, in the given order.
    [[nodiscard]] VaRPanel select(std::span<const std::size_t> columns) const;
};

struct RollConfig {
    double insample_fraction = 0.5;
    std::size_t refit_every = 100;
    std::vector<double> taus{0.01, 0.001};
    /// Worker threads for model columns; 0 = hardware concurrency.
    unsigned threads = 0;
};

struct RollFailure {
    std::string model_id;
    std::size_t step = 0;  // out-of-sample index of the failed refit
    std::string message;
};

struct RollResult {
    std::vector<VaRPanel> panels;  // one per tau, in config order
    std::vector<RollFailure> failures;
    std::vector<std::string> excluded;
    std::size_t insample_size = 0;
    std::size_t refits_per_model = 0;
    std::size_t unconverged_fits = 0;
};

/// Rolling-window out-of-sample forecasts. With n returns and W = floor(n * insample_fraction),
/// steps t = W..n-1 are forecast. Every `refit_every` steps each model is re-estimated on
/// returns [t-W, t); between refits the parameters and covariate scales stay fixed and the
/// filter state advances with realized data. A model whose refit fails is dropped from all
/// panels and listed in `failures`. `regressors[j]` holds the raw covariates of `specs[j]`, one
/// row per return. Fit seeds derive from `fit.seed`, the model id and the refit index.
[[nodiscard]] RollResult rolling_run(std::span<const vol::ModelSpec> specs, std::span<const double> returns,
                                     std::span<const std::int64_t> timestamps, std::span<const Matrix> regressors,
                                     const RollConfig& config, const est::FitConfig& fit);

/// `timestamp,realized,<model_id>...` with VaR values.
[[nodiscard]] std::string panel_var_csv(const VaRPanel& panel);
/// Same layout with the predicted conditional variances.
[[nodiscard]] std::string panel_sigma2_csv(const VaRPanel& panel);
/// Reads the two CSVs back into a panel.
[[nodiscard]] VaRPanel read_panel(const std::filesystem::path& var_csv, const std::filesystem::path& sigma2_csv,
                                  double tau);

}  // namespace varnews::fc
