#include "varnews/volatility.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace varnews::vol {

namespace {

constexpr std::size_t kBurnIn = 500;

void check_regressors(std::size_t n, const Matrix& x, std::size_t expected_cols) {
    if (x.cols() != expected_cols) {
        throw ValidationError("regressor matrix has " + std::to_string(x.cols()) + " columns, delta has " +
                              std::to_string(expected_cols));
    }
    if (x.cols() > 0 && x.rows() != n) {
        throw ValidationError("regressor rows (" + std::to_string(x.rows()) + ") do not match returns (" +
                              std::to_string(n) + ")");
    }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::span<const double> row_or_empty(const Matrix& x, std::size_t t) {
    return x.cols() == 0 ? std::span<const double>{} : x.row(t);
}

// Shared core of filter and likelihood. Returns false at the first non-finite value and reports
// the index through `bad_index`.
template <typename Visit>
bool run_recursion(Dynamics dynamics, const ParamVector& p, double abs_moment, std::span<const double> returns,
                   const Matrix& x, const FilterInit& init, Visit&& visit, std::size_t& bad_index) {
    double prev_return = init.pre_sample_return;
    double prev_eps = 0.0;
    double prev_sigma2 = init.initial_sigma2;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double sigma2 =
            t == 0 ? init.initial_sigma2
                   : next_variance(dynamics, p, abs_moment, prev_eps, prev_sigma2, row_or_empty(x, t));
        const double eps = returns[t] - p.mu - p.phi * prev_return;
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(eps)) {
            bad_index = t;
            return false;
        }
        visit(t, sigma2, eps);
        prev_return = returns[t];
        prev_eps = eps;
        prev_sigma2 = sigma2;
    }
    return true;
}

}  // namespace

std::string_view to_string(Dynamics d) {
    switch (d) {
        case Dynamics::Garch: return "GARCH";
        case Dynamics::Egarch: return "EGARCH";
        case Dynamics::Gjr: return "GJR";
    }
    return "?";
}

std::string_view to_string(RegressorKind r) {
    switch (r) {
        case RegressorKind::None: return "N";
        case RegressorKind::InfoVolume: return "IV";
        case RegressorKind::Sentiment: return "SE";
    }
    return "?";
}

Dynamics dynamics_from_string(std::string_view s) {
    if (s == "GARCH" || s == "garch") return Dynamics::Garch;
    if (s == "EGARCH" || s == "egarch") return Dynamics::Egarch;
    if (s == "GJR" || s == "gjr") return Dynamics::Gjr;
    throw ValidationError("unknown dynamics '" + std::string(s) + "'");
}

RegressorKind regressor_kind_from_string(std::string_view s) {
    if (s == "N" || s == "none") return RegressorKind::None;
    if (s == "IV" || s == "iv") return RegressorKind::InfoVolume;
    if (s == "SE" || s == "se") return RegressorKind::Sentiment;
    throw ValidationError("unknown regressor set '" + std::string(s) + "'");
}

std::size_t regressor_columns(RegressorKind r) noexcept {
    switch (r) {
        case RegressorKind::None: return 0;
        case RegressorKind::InfoVolume: return 2;
        case RegressorKind::Sentiment: return 3;
    }
    return 0;
}

std::string ModelSpec::id() const {
    std::string out(to_string(dynamics));
    out += '-';
    out += dist::to_string(law);
    out += '-';
    out += to_string(regressors);
    return out;
}

dist::ErrorLaw law_of(dist::LawKind kind, const ParamVector& p) {
    return kind == dist::LawKind::Gaussian ? dist::ErrorLaw::gaussian() : dist::ErrorLaw{kind, p.shape};
}

std::string constraint_violation(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                 std::size_t regressor_cols) {
    std::ostringstream msg;
    if (!dist::shape_in_domain(law)) {
        msg << "shape " << law.shape << " outside the domain of the error law";
        return msg.str();
    }
    if (p.delta.size() != regressor_cols) {
        msg << "delta has " << p.delta.size() << " entries, expected " << regressor_cols;
        return msg.str();
    }
    for (double v : {p.mu, p.phi, p.omega, p.alpha, p.beta, p.gamma}) {
        if (!std::isfinite(v)) return "non-finite parameter";
    }
    if (!(std::abs(p.phi) < 1.0)) return "|phi| must be < 1";
    switch (dynamics) {
        case Dynamics::Garch:
            if (!(p.omega > 0.0)) return "omega must be > 0";
            if (!(p.alpha >= 0.0 && p.alpha < 1.0)) return "alpha must lie in [0,1)";
            if (!(p.beta >= 0.0 && p.beta < 1.0)) return "beta must lie in [0,1)";
            if (!(p.alpha + p.beta < 1.0)) return "alpha + beta must be < 1";
            break;
        case Dynamics::Gjr: {
            if (!(p.omega > 0.0)) return "omega must be > 0";
            if (!(p.alpha >= 0.0 && p.alpha < 1.0)) return "alpha must lie in [0,1)";
            if (!(p.beta >= 0.0 && p.beta < 1.0)) return "beta must lie in [0,1)";
            if (!(p.gamma >= 0.0 && p.gamma < 1.0)) return "gamma must lie in [0,1)";
            if (!(p.alpha + p.beta + p.gamma * dist::prob_negative(law) < 1.0)) {
                return "alpha + beta + gamma * P(z<0) must be < 1";
            }
            break;
        }
        case Dynamics::Egarch:
            if (!(std::abs(p.beta) < 1.0)) return "|beta| must be < 1";
            break;
    }
    for (double d : p.delta) {
        if (!std::isfinite(d)) return "non-finite delta";
        if (dynamics != Dynamics::Egarch && d < 0.0) return "delta must be >= 0 for GARCH and GJR";
    }
    return {};
}

void validate_params(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p, std::size_t regressor_cols) {
    if (auto why = constraint_violation(dynamics, law, p, regressor_cols); !why.empty()) {
        throw ValidationError(std::string(to_string(dynamics)) + " constraint violated: " + why);
    }
}

std::size_t free_parameter_count(Dynamics dynamics, dist::LawKind law, std::size_t regressor_cols) {
    std::size_t k = 3 + regressor_cols + 2;  // mu, phi, omega, delta, alpha, beta
    if (dynamics != Dynamics::Garch) ++k;
    if (law != dist::LawKind::Gaussian) ++k;
    return k;
}

FilterInit default_init(std::span<const double> returns) {
    if (returns.empty()) throw ValidationError("filter: empty return series");
    return {varnews::mean(returns), population_variance(returns)};
}

double next_variance(Dynamics dynamics, const ParamVector& p, double abs_moment, double eps_prev,
                     double sigma2_prev, std::span<const double> x) noexcept {
    const double news = dot(p.delta, x);
    switch (dynamics) {
        case Dynamics::Garch: return p.omega + news + p.alpha * eps_prev * eps_prev + p.beta * sigma2_prev;
        case Dynamics::Gjr: {
            const double e2 = eps_prev * eps_prev;
            const double leverage = eps_prev <= 0.0 ? p.gamma * e2 : 0.0;
            return p.omega + news + p.alpha * e2 + leverage + p.beta * sigma2_prev;
        }
        case Dynamics::Egarch: {
            const double z = eps_prev / std::sqrt(sigma2_prev);
            const double g = p.alpha * z + p.gamma * (std::abs(z) - abs_moment);
            return std::exp(p.omega + news + g + p.beta * std::log(sigma2_prev));
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

FilterOutput filter(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                    std::span<const double> returns, const Matrix& regressors) {
    return filter(dynamics, law, p, returns, regressors, default_init(returns));
}

FilterOutput filter(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                    std::span<const double> returns, const Matrix& regressors, const FilterInit& init) {
    validate_params(dynamics, law, p, p.delta.size());
    check_regressors(returns.size(), regressors, p.delta.size());
    if (!(init.initial_sigma2 > 0.0)) throw ValidationError("filter: initial variance must be positive");
    const double m = dist::abs_moment(law);
    FilterOutput out;
    out.sigma2.resize(returns.size());
    out.eps.resize(returns.size());
    out.z.resize(returns.size());
    std::size_t bad = 0;
    const bool ok = run_recursion(
        dynamics, p, m, returns, regressors, init,
        [&](std::size_t t, double sigma2, double eps) {
            out.sigma2[t] = sigma2;
            out.eps[t] = eps;
            out.z[t] = eps / std::sqrt(sigma2);
        },
        bad);
    if (!ok) throw NumericalError("filter: non-finite conditional variance or residual at index " + std::to_string(bad));
    return out;
}

double log_likelihood(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                      std::span<const double> returns, const Matrix& regressors) {
    const FilterOutput f = filter(dynamics, law, p, returns, regressors);
    const dist::LogDensity logf(law);
    double ll = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t) ll += logf(f.z[t]) - 0.5 * std::log(f.sigma2[t]);
    if (!std::isfinite(ll)) throw NumericalError("log_likelihood: non-finite value");
    return ll;
}

double log_likelihood_or_infeasible(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p,
                                    std::span<const double> returns, const Matrix& regressors,
                                    const FilterInit& init) noexcept {
    constexpr double kInfeasible = -std::numeric_limits<double>::infinity();
    if (!constraint_violation(dynamics, law, p, p.delta.size()).empty()) return kInfeasible;
    if (regressors.cols() != p.delta.size() || (regressors.cols() > 0 && regressors.rows() != returns.size())) {
        return kInfeasible;
    }
    try {
        const double m = dist::abs_moment(law);
        const dist::LogDensity logf(law);
        double ll = 0.0;
        std::size_t bad = 0;
        const bool ok = run_recursion(
            dynamics, p, m, returns, regressors, init,
            [&](std::size_t, double sigma2, double eps) {
                ll += logf(eps / std::sqrt(sigma2)) - 0.5 * std::log(sigma2);
            },
            bad);
        return ok && std::isfinite(ll) ? ll : kInfeasible;
    } catch (...) {
        return kInfeasible;
    }
}

double unconditional_variance(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p) {
    switch (dynamics) {
        case Dynamics::Garch: return p.omega / (1.0 - p.alpha - p.beta);
        case Dynamics::Gjr: return p.omega / (1.0 - p.alpha - p.beta - p.gamma * dist::prob_negative(law));
        case Dynamics::Egarch: return std::exp(p.omega / (1.0 - p.beta));
    }
    return 0.0;
}

std::vector<double> simulate(Dynamics dynamics, const dist::ErrorLaw& law, const ParamVector& p, std::size_t n,
                             std::uint64_t seed, const Matrix& regressors) {
    validate_params(dynamics, law, p, p.delta.size());
    if (n < 2) throw ValidationError("simulate: n must be >= 2");
    check_regressors(n, regressors, p.delta.size());
    const auto shocks = dist::sample(law, seed, n + kBurnIn);
    const double m = dist::abs_moment(law);
    const std::vector<double> no_news(p.delta.size(), 0.0);

    double prev_return = p.mu / (1.0 - p.phi);
    double prev_eps = 0.0;
    double prev_sigma2 = unconditional_variance(dynamics, law, p);
    std::vector<double> out(n);
    for (std::size_t s = 0; s < n + kBurnIn; ++s) {
        const bool burn = s < kBurnIn;
        const auto x = burn ? std::span<const double>(no_news) : row_or_empty(regressors, s - kBurnIn);
        const double sigma2 = next_variance(dynamics, p, m, prev_eps, prev_sigma2, x);
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
            throw NumericalError("simulate: non-finite variance at step " + std::to_string(s));
        }
        const double eps = std::sqrt(sigma2) * shocks[s];
        const double r = p.mu + p.phi * prev_return + eps;
        if (!burn) out[s - kBurnIn] = r;
        prev_return = r;
        prev_eps = eps;
        prev_sigma2 = sigma2;
    }
    return out;
}

}  // namespace varnews::vol
