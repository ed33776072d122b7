#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace varnews::bt {

struct HitSeries {
    std::vector<int> hits;
    double tau = 0.01;

    [[nodiscard]] std::size_t n() const noexcept { return hits.size(); }
    [[nodiscard]] std::size_t count() const noexcept;
};

/// hit[t] = 1 iff realized[t] < var[t] (strict).
[[nodiscard]] HitSeries hits(std::span<const double> realized, std::span<const double> var, double tau);

[[nodiscard]] double ae_ratio(const HitSeries& h);

struct AdStats {
    double mean = 0.0;
    double max = 0.0;
    bool no_hits = true;
};
/// Mean and maximum of |realized - var| over violations; zeros and `no_hits` when there are none.
[[nodiscard]] AdStats ad_stats(std::span<const double> realized, std::span<const double> var, const HitSeries& h);

struct TestResult {
    double stat = 0.0;
    double pvalue = 1.0;
    std::size_t df = 0;
};

/// Upper tail of the chi-square distribution via the regularized upper incomplete gamma.
[[nodiscard]] double chi2_survival(double x, double df);

[[nodiscard]] TestResult kupiec_uc(const HitSeries& h);
[[nodiscard]] TestResult christoffersen_cc(const HitSeries& h);

struct DqOptions {
    std::size_t lags = 4;
    /// Drop regressors that are linear combinations of earlier ones (intercept, lags, VaR order)
    /// and use the retained count as degrees of freedom. When false a singular design throws.
    bool drop_collinear = true;
};
[[nodiscard]] TestResult engle_manganelli_dq(const HitSeries& h, std::span<const double> var,
                                             const DqOptions& options = {});

struct BacktestReport {
    std::string model_id;
    double tau = 0.0;
    std::size_t n = 0;
    std::size_t violations = 0;
    double ae_ratio = 0.0;
    double ad_mean = 0.0;
    double ad_max = 0.0;
    TestResult uc, cc, dq;
};

[[nodiscard]] BacktestReport backtest(const std::string& model_id, std::span<const double> realized,
                                      std::span<const double> var, double tau, const DqOptions& options = {});

/// One row per model: model,n,violations,ae,ad_mean,ad_max,uc_stat,uc_p,cc_stat,cc_p,dq_stat,dq_p,dq_df.
[[nodiscard]] std::string reports_csv(std::span<const BacktestReport> reports);
[[nodiscard]] std::string reports_json(std::span<const BacktestReport> reports);

}  // namespace varnews::bt
