#include "varnews/backtest.hpp"

#include "varnews/common.hpp"
#include "varnews/csv.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace varnews::bt {

namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void check_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ValidationError(std::string(what) + ": series lengths differ");
}

double uc_statistic(std::size_t n, std::size_t n1, double tau) {
    const double dn1 = static_cast<double>(n1);
    const double dn0 = static_cast<double>(n - n1);
    const double pi = dn1 / static_cast<double>(n);
    const double lr = -2.0 * (xlogy(dn0, 1.0 - tau) + xlogy(dn1, tau) - xlogy(dn0, 1.0 - pi) - xlogy(dn1, pi));
    return std::max(lr, 0.0);
}

}  // namespace

std::size_t HitSeries::count() const noexcept {
    std::size_t c = 0;
    for (int h : hits) c += static_cast<std::size_t>(h);
    return c;
}

HitSeries hits(std::span<const double> realized, std::span<const double> var, double tau) {
    check_aligned(realized.size(), var.size(), "hits");
    HitSeries h;
    h.tau = tau;
    h.hits.resize(realized.size());
    for (std::size_t t = 0; t < realized.size(); ++t) h.hits[t] = realized[t] < var[t] ? 1 : 0;
    return h;
}

double ae_ratio(const HitSeries& h) {
    if (h.n() == 0) throw ValidationError("ae_ratio: empty hit series");
    return static_cast<double>(h.count()) / (static_cast<double>(h.n()) * h.tau);
}

AdStats ad_stats(std::span<const double> realized, std::span<const double> var, const HitSeries& h) {
    check_aligned(realized.size(), var.size(), "ad_stats");
    check_aligned(realized.size(), h.n(), "ad_stats");
    AdStats out;
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t t = 0; t < h.n(); ++t) {
        if (!h.hits[t]) continue;
        const double ad = std::abs(realized[t] - var[t]);
        sum += ad;
        out.max = std::max(out.max, ad);
        ++k;
    }
    if (k > 0) {
        out.mean = sum / static_cast<double>(k);
        out.no_hits = false;
    }
    return out;
}

double chi2_survival(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("chi2_survival: degrees of freedom must be positive");
    if (!(x > 0.0)) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

TestResult kupiec_uc(const HitSeries& h) {
    if (h.n() == 0) throw ValidationError("kupiec_uc: empty hit series");
    TestResult r;
    r.df = 1;
    r.stat = uc_statistic(h.n(), h.count(), h.tau);
    r.pvalue = chi2_survival(r.stat, 1.0);
    return r;
}

TestResult christoffersen_cc(const HitSeries& h) {
    if (h.n() < 2) throw ValidationError("christoffersen_cc: need at least two observations");
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < h.n(); ++t) {
        const int a = h.hits[t - 1], b = h.hits[t];
        if (a == 0 && b == 0) ++n00;
        else if (a == 0) ++n01;
        else if (b == 0) ++n10;
        else ++n11;
    }
    const double p01 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
    const double p11 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
    const double p = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double restricted = xlogy(n00 + n10, 1.0 - p) + xlogy(n01 + n11, p);
    const double markov = xlogy(n00, 1.0 - p01) + xlogy(n01, p01) + xlogy(n10, 1.0 - p11) + xlogy(n11, p11);
    const double ind = std::max(-2.0 * (restricted - markov), 0.0);
    TestResult r;
    r.df = 2;
    r.stat = uc_statistic(h.n(), h.count(), h.tau) + ind;
    r.pvalue = chi2_survival(r.stat, 2.0);
    return r;
}

TestResult engle_manganelli_dq(const HitSeries& h, std::span<const double> var, const DqOptions& options) {
    check_aligned(h.n(), var.size(), "engle_manganelli_dq");
    const std::size_t lags = options.lags;
    if (h.n() <= lags + 2) throw ValidationError("engle_manganelli_dq: need more than lags + 2 observations");
    const auto rows = static_cast<Eigen::Index>(h.n() - lags);
    const auto cols = static_cast<Eigen::Index>(lags + 2);
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const std::size_t t = static_cast<std::size_t>(i) + lags;
        y(i) = h.hits[t] - h.tau;
        x(i, 0) = 1.0;
        for (std::size_t k = 1; k <= lags; ++k) x(i, static_cast<Eigen::Index>(k)) = h.hits[t - k] - h.tau;
        x(i, cols - 1) = var[t];
    }

    // Modified Gram-Schmidt in column order; a column whose residual is negligible relative to
    // its own norm is a linear combination of the columns kept before it.
    std::vector<Eigen::Index> keep;
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index c = 0; c < cols; ++c) {
        Eigen::VectorXd v = x.col(c);
        const double norm0 = v.norm();
        for (const auto& q : basis) v -= q.dot(v) * q;
        const double norm1 = v.norm();
        if (norm0 > 0.0 && norm1 > 1e-10 * norm0) {
            keep.push_back(c);
            basis.push_back(v / norm1);
        }
    }
    if (!options.drop_collinear && static_cast<Eigen::Index>(keep.size()) < cols) {
        throw NumericalError("engle_manganelli_dq: singular design matrix (rank " + std::to_string(keep.size()) +
                             " of " + std::to_string(cols) + "); reduce lags or vary the VaR column");
    }
    Eigen::MatrixXd xk(rows, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
    const Eigen::VectorXd b = xk.colPivHouseholderQr().solve(y);
    const double fitted_ss = (xk * b).squaredNorm();

    TestResult r;
    r.df = keep.size();
    r.stat = fitted_ss / (h.tau * (1.0 - h.tau));
    r.pvalue = chi2_survival(r.stat, static_cast<double>(r.df));
    return r;
}

BacktestReport backtest(const std::string& model_id, std::span<const double> realized, std::span<const double> var,
                        double tau, const DqOptions& options) {
    const HitSeries h = hits(realized, var, tau);
    const AdStats ad = ad_stats(realized, var, h);
    BacktestReport r;
    r.model_id = model_id;
    r.tau = tau;
    r.n = h.n();
    r.violations = h.count();
    r.ae_ratio = ae_ratio(h);
    r.ad_mean = ad.mean;
    r.ad_max = ad.max;
    r.uc = kupiec_uc(h);
    r.cc = christoffersen_cc(h);
    r.dq = engle_manganelli_dq(h, var, options);
    return r;
}

std::string reports_csv(std::span<const BacktestReport> reports) {
    csv::Writer w;
    w.row({"model", "tau", "n", "violations", "ae", "ad_mean", "ad_max", "uc_stat", "uc_p", "cc_stat", "cc_p",
           "dq_stat", "dq_p", "dq_df"});
    const auto f = csv::format_double;
    for (const auto& r : reports) {
        w.row({r.model_id, f(r.tau), std::to_string(r.n), std::to_string(r.violations), f(r.ae_ratio), f(r.ad_mean),
               f(r.ad_max), f(r.uc.stat), f(r.uc.pvalue), f(r.cc.stat), f(r.cc.pvalue), f(r.dq.stat), f(r.dq.pvalue),
               std::to_string(r.dq.df)});
    }
    return w.str();
}

std::string reports_json(std::span<const BacktestReport> reports) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        auto test = [](const TestResult& t) {
            return nlohmann::ordered_json{{"stat", t.stat}, {"pvalue", t.pvalue}, {"df", t.df}};
        };
        out.push_back({{"model", r.model_id},
                       {"tau", r.tau},
                       {"n", r.n},
                       {"violations", r.violations},
                       {"ae", r.ae_ratio},
                       {"ad_mean", r.ad_mean},
                       {"ad_max", r.ad_max},
                       {"uc", test(r.uc)},
                       {"cc", test(r.cc)},
                       {"dq", test(r.dq)}});
    }
    return out.dump(2) + "\n";
}

}  // namespace varnews::bt
