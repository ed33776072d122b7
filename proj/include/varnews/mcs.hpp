#pragma once

#include "varnews/common.hpp"
#include "varnews/forecasting.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace varnews::mcs {

/// Pinball loss of z = r - var: z * (tau - 1{z < 0}).
[[nodiscard]] double quantile_loss(double r, double var, double tau);

struct LossMatrix {
    Matrix losses;  // time x model
    std::vector<std::string> model_ids;
    double tau = 0.01;
};

[[nodiscard]] LossMatrix loss_matrix(const fc::VaRPanel& panel);

struct MCSConfig {
    double alpha = 0.25;
    std::size_t B = 1000;
    std::size_t max_block_lag = 10;
    std::uint64_t seed = 1;
};

/// Number of significant (|t| > 1.96) lag coefficients of an OLS AR(p) fit with intercept,
/// p = min(max_lag, n / 5), maximized over the series; at least 1.
[[nodiscard]] std::size_t block_length(std::span<const std::vector<double>> series, std::size_t max_lag);
/// block_length over all pairwise loss differentials of the columns of `losses`.
[[nodiscard]] std::size_t block_length(const Matrix& losses, std::size_t max_lag);

/// B moving-block resamples of 0..n-1. Each replicate holds v = floor(n/k) - 1 blocks of k
/// consecutive indices (wrapping past n-1 to 0) from uniform starts, followed by l = n - kv
/// uniform single draws. Per replicate the v starts are drawn first, then the l singles, all
/// from one mt19937_64 seeded with `seed` through std::uniform_int_distribution.
[[nodiscard]] std::vector<std::vector<std::uint32_t>> bootstrap_indices(std::size_t n, std::size_t k, std::size_t B,
                                                                        std::uint64_t seed);

struct BootstrapVariance {
    double variance = 0.0;
    /// The differential is identically zero (bit-identical losses); the pair carries no information.
    bool flagged = false;
};
/// (1/B) sum_b (mean(d[idx_b]) - mean(d))^2.
[[nodiscard]] BootstrapVariance bootstrap_variance(std::span<const double> d,
                                                   std::span<const std::vector<std::uint32_t>> indices);

struct TrStatistic {
    double value = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
};
/// max over unflagged pairs of |mean d_ij| / sqrt(var(mean d_ij)). Throws ValidationError when
/// every pair is flagged.
[[nodiscard]] TrStatistic t_r_statistic(const Matrix& losses, std::span<const std::vector<std::uint32_t>> indices);

struct Elimination {
    std::string model_id;
    double t_r = 0.0;
    double pvalue = 0.0;  // running maximum
};

struct MCSResult {
    std::vector<std::string> surviving_ids;
    std::vector<Elimination> elimination_order;
    std::size_t block_length = 1;
    double final_pvalue = 1.0;
    /// MCS p-value of every model: the running p-value at its elimination, or final_pvalue.
    std::map<std::string, double> pvalues;
};

/// Sequential elimination at level alpha. Block length is chosen once on the full set and one set
/// of bootstrap indices is shared by every step and pair.
[[nodiscard]] MCSResult mcs_run(const LossMatrix& losses, const MCSConfig& config);

[[nodiscard]] std::string result_json(const MCSResult& result, const LossMatrix& losses, const MCSConfig& config);

/// Per sector: percentage of surviving models per covariate set (read from the id suffix
/// -IV, -SE, -N) and the surviving count. Header sector,IV,SE,N,count.
[[nodiscard]] std::string composition_csv(std::span<const std::string> sectors, std::span<const MCSResult> results);

}  // namespace varnews::mcs
