#include "varnews/estimation.hpp"

#include "varnews/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace varnews::est {

namespace {

using vol::Dynamics;

constexpr double kProbFloor = 1e-15;
constexpr double kDeltaFloor = 1e-14;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
    p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    return std::log(p) - std::log1p(-p);
}

double safe_atanh(double x) { return std::atanh(std::clamp(x, -1.0 + kProbFloor, 1.0 - kProbFloor)); }

// Share of `part` in `whole`, 1/2 when the whole is negligible.
double share(double part, double whole) { return whole > kProbFloor ? part / whole : 0.5; }

double shape_to_free(dist::LawKind law, double shape) {
    if (law == dist::LawKind::StudentT) return std::log(std::max(shape - dist::kMinStudentShape, 1e-300));
    return std::log(shape);
}

double shape_from_free(dist::LawKind law, double x) {
    if (law == dist::LawKind::StudentT) return dist::kMinStudentShape + std::exp(x);
    return std::exp(x);
}

double lag1_autocorrelation(std::span<const double> r) {
    const double m = varnews::mean(r);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        den += (r[t] - m) * (r[t] - m);
        if (t > 0) num += (r[t] - m) * (r[t - 1] - m);
    }
    return den > 0.0 ? num / den : 0.0;
}

std::vector<double> initial_steps(const vol::ParamVector& start, Dynamics dynamics, dist::LawKind law,
                                  double return_sd) {
    std::vector<double> steps;
    steps.push_back(0.1 * return_sd);  // mu
    steps.push_back(0.1);              // phi
    steps.push_back(dynamics == Dynamics::Egarch ? std::max(0.1, 0.1 * std::abs(start.omega)) : 0.5);
    for (std::size_t i = 0; i < start.delta.size(); ++i) steps.push_back(dynamics == Dynamics::Egarch ? 0.05 : 2.0);
    switch (dynamics) {
        case Dynamics::Garch: steps.insert(steps.end(), {0.5, 0.5}); break;
        case Dynamics::Gjr: steps.insert(steps.end(), {0.5, 0.5, 0.5}); break;
        case Dynamics::Egarch: steps.insert(steps.end(), {0.05, 0.5, 0.05}); break;
    }
    if (law != dist::LawKind::Gaussian) steps.push_back(0.3);
    return steps;
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

std::vector<double> to_unconstrained(const vol::ParamVector& p, Dynamics dynamics, dist::LawKind law) {
    std::vector<double> theta;
    theta.push_back(p.mu);
    theta.push_back(safe_atanh(p.phi));
    if (dynamics == Dynamics::Egarch) {
        theta.push_back(p.omega);
        for (double d : p.delta) theta.push_back(d);
        theta.push_back(p.alpha);
        theta.push_back(safe_atanh(p.beta));
        theta.push_back(p.gamma);
    } else {
        theta.push_back(std::log(p.omega));
        for (double d : p.delta) theta.push_back(std::log(std::max(d, kDeltaFloor)));
        if (dynamics == Dynamics::Garch) {
            const double s = p.alpha + p.beta;
            theta.push_back(logit(s));
            theta.push_back(logit(share(p.alpha, s)));
        } else {
            const double prob_neg = dist::prob_negative(vol::law_of(law, p));
            const double budget = 1.0 - prob_neg * p.gamma;
            const double s = p.alpha + p.beta;
            theta.push_back(logit(p.gamma));
            theta.push_back(logit(s / budget));
            theta.push_back(logit(share(p.alpha, s)));
        }
    }
    if (law != dist::LawKind::Gaussian) theta.push_back(shape_to_free(law, p.shape));
    return theta;
}

vol::ParamVector from_unconstrained(std::span<const double> theta, Dynamics dynamics, dist::LawKind law,
                                    std::size_t regressor_cols) {
    const std::size_t expected = vol::free_parameter_count(dynamics, law, regressor_cols);
    if (theta.size() != expected) throw ValidationError("from_unconstrained: wrong parameter count");
    vol::ParamVector p;
    std::size_t i = 0;
    p.mu = theta[i++];
    p.phi = std::tanh(theta[i++]);
    if (law != dist::LawKind::Gaussian) p.shape = shape_from_free(law, theta.back());
    if (dynamics == Dynamics::Egarch) {
        p.omega = theta[i++];
        for (std::size_t k = 0; k < regressor_cols; ++k) p.delta.push_back(theta[i++]);
        p.alpha = theta[i++];
        p.beta = std::tanh(theta[i++]);
        p.gamma = theta[i++];
        return p;
    }
    p.omega = std::exp(theta[i++]);
    for (std::size_t k = 0; k < regressor_cols; ++k) p.delta.push_back(std::max(std::exp(theta[i++]), kDeltaFloor));
    if (dynamics == Dynamics::Garch) {
        const double s = logistic(theta[i++]);
        const double a = logistic(theta[i++]);
        p.alpha = s * a;
        p.beta = s * (1.0 - a);
    } else {
        p.gamma = logistic(theta[i++]);
        const double prob_neg = dist::prob_negative(vol::law_of(law, p));
        const double s = (1.0 - prob_neg * p.gamma) * logistic(theta[i++]);
        const double a = logistic(theta[i++]);
        p.alpha = s * a;
        p.beta = s * (1.0 - a);
    }
    return p;
}

vol::ParamVector canonical_start(Dynamics dynamics, dist::LawKind law, std::span<const double> returns,
                                 std::size_t regressor_cols) {
    const double var = population_variance(returns);
    vol::ParamVector p;
    p.mu = varnews::mean(returns);
    p.phi = std::clamp(lag1_autocorrelation(returns), -0.49, 0.49);
    p.alpha = 0.05;
    p.beta = 0.90;
    p.gamma = dynamics == Dynamics::Garch ? 0.0 : 0.05;
    if (dynamics == Dynamics::Egarch) {
        // omega lives in log-variance units; match the unconditional log variance.
        p.omega = (1.0 - p.beta) * std::log(var);
        p.delta.assign(regressor_cols, 0.0);
    } else {
        p.omega = 0.05 * var;
        p.delta.assign(regressor_cols, 1e-4 * var);
    }
    if (law == dist::LawKind::GED) p.shape = 1.5;
    if (law == dist::LawKind::StudentT) p.shape = 8.0;
    return p;
}

std::vector<double> column_scales(const Matrix& regressors) {
    std::vector<double> scales(regressors.cols(), 1.0);
    for (std::size_t c = 0; c < regressors.cols(); ++c) {
        const auto col = regressors.column(c);
        if (col.empty()) continue;
        const double sd = std::sqrt(population_variance(col));
        if (sd > 0.0 && std::isfinite(sd)) scales[c] = sd;
    }
    return scales;
}

Matrix scale_columns(const Matrix& regressors, std::span<const double> scales) {
    if (scales.size() != regressors.cols()) throw ValidationError("scale_columns: scale count mismatch");
    Matrix out = regressors;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= scales[c];
    return out;
}

double aic(double loglik, std::size_t k) { return 2.0 * static_cast<double>(k) - 2.0 * loglik; }

double bic(double loglik, std::size_t k, std::size_t n_obs) {
    return static_cast<double>(k) * std::log(static_cast<double>(n_obs)) - 2.0 * loglik;
}

FittedModel fit(const vol::ModelSpec& spec, std::span<const double> returns, const Matrix& regressors,
                const FitConfig& config) {
    const std::size_t cols = vol::regressor_columns(spec.regressors);
    if (config.starts < 1 || !(config.tolerance > 0.0) || config.max_iterations < 1) {
        throw ValidationError("fit: invalid configuration");
    }
    if (returns.size() < config.min_obs) {
        throw ValidationError("fit: " + std::to_string(returns.size()) + " observations, need at least " +
                              std::to_string(config.min_obs));
    }
    if (regressors.cols() != cols || (cols > 0 && regressors.rows() != returns.size())) {
        throw ValidationError("fit: regressor matrix does not match the " + std::string(vol::to_string(spec.regressors)) +
                              " specification");
    }
    const vol::FilterInit init = vol::default_init(returns);
    if (!(init.initial_sigma2 > 0.0)) throw ValidationError("fit: degenerate data (zero variance)");

    FittedModel out;
    out.spec = spec;
    out.n_obs = returns.size();
    out.init = init;
    out.regressor_scales = column_scales(regressors);
    const Matrix x = scale_columns(regressors, out.regressor_scales);

    auto objective = [&](std::span<const double> theta) {
        const vol::ParamVector p = from_unconstrained(theta, spec.dynamics, spec.law, cols);
        return -vol::log_likelihood_or_infeasible(spec.dynamics, vol::law_of(spec.law, p), p, returns, x, init);
    };

    vol::ParamVector start = canonical_start(spec.dynamics, spec.law, returns, cols);
    if (config.initial &&
        vol::constraint_violation(spec.dynamics, vol::law_of(spec.law, *config.initial), *config.initial, cols).empty()) {
        start = *config.initial;
    }
    const std::vector<double> theta0 = to_unconstrained(start, spec.dynamics, spec.law);
    opt::NelderMeadOptions options;
    options.max_iterations = config.max_iterations;
    options.f_tolerance = config.tolerance;
    options.x_tolerance = 1e-6;
    options.steps = initial_steps(start, spec.dynamics, spec.law, std::sqrt(init.initial_sigma2));

    struct Candidate {
        std::vector<double> theta;
        double value = std::numeric_limits<double>::infinity();
        bool converged = false;
        std::vector<double> trace;
    };
    std::vector<Candidate> candidates;
    for (int s = 0; s < config.starts; ++s) {
        std::vector<double> theta = theta0;
        if (s > 0) {
            std::mt19937_64 rng(derive_seed(config.seed, "fit-start-" + std::to_string(s)));
            std::normal_distribution<double> noise(0.0, 1.0);
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += 0.5 * options.steps[i] * noise(rng);
        }
        out.start_logliks.push_back(-objective(theta));

        // Restart the simplex at the optimum until a restart no longer improves it.
        Candidate c;
        int budget = config.max_iterations;
        for (int round = 0; round < 4 && budget > 0; ++round) {
            opt::NelderMeadOptions o = options;
            o.max_iterations = budget;
            const auto r = opt::nelder_mead(objective, theta, o);
            budget -= r.iterations;
            const bool improved = r.value < c.value - config.tolerance * (std::abs(c.value) + 1e-12);
            for (double v : r.trace) c.trace.push_back(c.trace.empty() ? v : std::min(c.trace.back(), v));
            if (r.value <= c.value) {
                c.value = r.value;
                c.theta = r.x;
                theta = r.x;
            }
            c.converged = r.converged;
            if (!improved && round > 0) break;
            if (!r.converged) break;
        }
        candidates.push_back(std::move(c));
    }

    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (!std::isfinite(c.value)) continue;
        if (best == nullptr || c.value < best->value ||
            (c.value == best->value && norm(c.theta) < norm(best->theta))) {
            best = &c;
        }
    }
    if (best == nullptr) throw NumericalError("fit: all " + std::to_string(config.starts) + " starts diverged for " + spec.id());

    out.params = from_unconstrained(best->theta, spec.dynamics, spec.law, cols);
    out.loglik = -best->value;
    out.converged = best->converged &&
                    vol::constraint_violation(spec.dynamics, vol::law_of(spec.law, out.params), out.params, cols).empty();
    for (double v : best->trace) out.trace.push_back(-v);
    const std::size_t k = vol::free_parameter_count(spec.dynamics, spec.law, cols);
    out.aic = aic(out.loglik, k);
    out.bic = bic(out.loglik, k, out.n_obs);
    return out;
}

}  // namespace varnews::est
