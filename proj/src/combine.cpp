#include "varnews/combine.hpp"

#include "varnews/mcs.hpp"
#include "varnews/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varnews::comb {

namespace {

void check_panel(const Matrix& var, std::span<const double> realized, const Matrix& sigma2_hat) {
    if (var.cols() == 0) throw ValidationError("combine: no models");
    if (var.rows() != realized.size() || sigma2_hat.rows() != var.rows() || sigma2_hat.cols() != var.cols()) {
        throw ValidationError("combine: VaR, variance and realized series are not aligned");
    }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> static_average(const Matrix& var) {
    if (var.cols() == 0) throw ValidationError("static_average: no models");
    std::vector<double> out(var.rows());
    for (std::size_t t = 0; t < var.rows(); ++t) {
        double s = 0.0;
        for (double v : var.row(t)) s += v;
        out[t] = s / static_cast<double>(var.cols());
    }
    return out;
}

std::vector<double> normalized_kernel(double r, std::span<const double> var_row, std::span<const double> sigma_row,
                                      double tau, double sign) {
    if (var_row.size() != sigma_row.size() || var_row.empty()) {
        throw ValidationError("normalized_kernel: rows differ in length or are empty");
    }
    std::vector<double> e(var_row.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (!(sigma_row[j] > 0.0)) throw ValidationError("normalized_kernel: sigma must be positive");
        e[j] = sign * mcs::quantile_loss(r, var_row[j], tau) / sigma_row[j];
        top = std::max(top, e[j]);
    }
    double total = 0.0;
    for (double& v : e) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : e) v /= total;
    return e;
}

WeightSeries dynamic_weights(const Matrix& var, std::span<const double> realized, const Matrix& sigma2_hat,
                             std::span<const double> kappa, double tau, double sign) {
    check_panel(var, realized, sigma2_hat);
    const std::size_t m = var.cols();
    if (kappa.size() != m) throw ValidationError("dynamic_weights: one kappa per model required");
    for (double k : kappa) {
        if (!(k > 0.0 && k < 1.0)) throw ValidationError("dynamic_weights: kappa must lie in (0,1)");
    }
    WeightSeries out;
    out.kappa.assign(kappa.begin(), kappa.end());
    out.weights = Matrix(var.rows(), m);
    if (var.rows() == 0) return out;
    for (std::size_t j = 0; j < m; ++j) out.weights(0, j) = 1.0 / static_cast<double>(m);
    std::vector<double> sigma(m);
    for (std::size_t t = 0; t + 1 < var.rows(); ++t) {
        for (std::size_t j = 0; j < m; ++j) sigma[j] = std::sqrt(sigma2_hat(t, j));
        const auto pi = normalized_kernel(realized[t], var.row(t), sigma, tau, sign);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = kappa[j] * out.weights(t, j) + (1.0 - kappa[j]) * pi[j];
            out.weights(t + 1, j) = w;
            total += w;
        }
        for (std::size_t j = 0; j < m; ++j) out.weights(t + 1, j) /= total;
    }
    return out;
}

std::vector<double> combine(const Matrix& var, const Matrix& weights) {
    if (var.rows() != weights.rows() || var.cols() != weights.cols()) {
        throw ValidationError("combine: weights and VaR matrix differ in shape");
    }
    std::vector<double> out(var.rows());
    for (std::size_t t = 0; t < var.rows(); ++t) {
        const auto v = var.row(t);
        const auto w = weights.row(t);
        double s = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) s += w[j] * v[j];
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        out[t] = std::clamp(s, *lo, *hi);
    }
    return out;
}

double average_loss(std::span<const double> realized, std::span<const double> var, double tau) {
    if (realized.size() != var.size() || realized.empty()) throw ValidationError("average_loss: bad lengths");
    double s = 0.0;
    for (std::size_t t = 0; t < var.size(); ++t) s += mcs::quantile_loss(realized[t], var[t], tau);
    return s / static_cast<double>(var.size());
}

KappaFit optimize_kappa(const Matrix& var, std::span<const double> realized, const Matrix& sigma2_hat, double tau,
                        double sign, const KappaOptions& options) {
    check_panel(var, realized, sigma2_hat);
    const std::size_t m = var.cols();
    const double eps = options.epsilon;
    if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("optimize_kappa: epsilon must lie in (0, 0.5)");
    if (options.start_levels.empty()) throw ValidationError("optimize_kappa: no start levels");

    auto to_kappa = [&](std::span<const double> theta) {
        std::vector<double> k(theta.size());
        for (std::size_t j = 0; j < k.size(); ++j) k[j] = eps + (1.0 - 2.0 * eps) * logistic(theta[j]);
        return k;
    };
    auto objective = [&](std::span<const double> theta) {
        const auto w = dynamic_weights(var, realized, sigma2_hat, to_kappa(theta), tau, sign);
        return average_loss(realized, combine(var, w.weights), tau);
    };

    KappaFit best;
    best.loss = std::numeric_limits<double>::infinity();
    if (m == 1) {
        best.kappa = {0.5};
        best.loss = average_loss(realized, var.column(0), tau);
        best.converged = true;
        return best;
    }

    std::vector<opt::NelderMeadResult> runs(options.start_levels.size());
    parallel_for(runs.size(), options.threads, [&](std::size_t s) {
        const double c = std::clamp(options.start_levels[s], eps * 2.0, 1.0 - eps * 2.0);
        const double u = (c - eps) / (1.0 - 2.0 * eps);
        std::vector<double> theta0(m, std::log(u) - std::log1p(-u));
        opt::NelderMeadOptions o;
        o.max_iterations = options.max_iterations;
        o.f_tolerance = 1e-10;
        o.x_tolerance = 1e-4;
        o.initial_step = 1.0;
        runs[s] = opt::nelder_mead(objective, theta0, o);
    });
    for (const auto& r : runs) {
        if (r.value < best.loss) {
            best.loss = r.value;
            best.kappa = to_kappa(r.x);
            best.converged = r.converged;
        }
    }
    return best;
}

}  // namespace varnews::comb
