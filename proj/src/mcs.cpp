#include "varnews/mcs.hpp"

#include "varnews/csv.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace varnews::mcs {

namespace {

constexpr double kSignificance = 1.96;

// Lag coefficients of an OLS AR(p) with intercept that are individually significant.
std::size_t significant_lags(std::span<const double> d, std::size_t max_lag) {
    const std::size_t n = d.size();
    if (n < 20) return 0;
    const std::size_t p = std::max<std::size_t>(1, std::min(max_lag, n / 5));
    const auto rows = static_cast<Eigen::Index>(n - p);
    const auto cols = static_cast<Eigen::Index>(p + 1);
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const std::size_t t = static_cast<std::size_t>(i) + p;
        y(i) = d[t];
        x(i, 0) = 1.0;
        for (std::size_t k = 1; k <= p; ++k) x(i, static_cast<Eigen::Index>(k)) = d[t - k];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) return 0;
    const Eigen::VectorXd b = qr.solve(y);
    const double rss = (y - x * b).squaredNorm();
    const double dof = static_cast<double>(rows - cols);
    if (dof <= 0.0) return 0;
    const double s2 = rss / dof;
    if (!(s2 > 1e-300)) return 0;
    const Eigen::MatrixXd cov = s2 * (x.transpose() * x).inverse();
    std::size_t count = 0;
    for (Eigen::Index k = 1; k < cols; ++k) {
        const double se = std::sqrt(cov(k, k));
        if (se > 0.0 && std::abs(b(k)) / se > kSignificance) ++count;
    }
    return count;
}

// Full-sample and per-replicate column means of a loss matrix.
struct Resampled {
    std::vector<double> mean;
    Matrix boot;  // B x models
};

Resampled resample_means(const Matrix& losses, std::span<const std::vector<std::uint32_t>> indices) {
    const std::size_t n = losses.rows(), m = losses.cols();
    Resampled r;
    r.mean.assign(m, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < m; ++j) r.mean[j] += losses(t, j);
    for (double& v : r.mean) v /= static_cast<double>(n);
    r.boot = Matrix(indices.size(), m);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        if (indices[b].size() != n) throw ValidationError("bootstrap replicate length differs from the loss series");
        auto row = r.boot.row(b);
        for (std::uint32_t t : indices[b]) {
            if (t >= n) throw ValidationError("bootstrap index out of range");
            const auto l = losses.row(t);
            for (std::size_t j = 0; j < m; ++j) row[j] += l[j];
        }
        for (double& v : row) v /= static_cast<double>(n);
    }
    return r;
}

struct PairStats {
    bool valid = false;
    double dbar = 0.0;
    double sd = 0.0;
};

// Pair statistics of every column pair. A pair with identical columns is invalid. A variance
// that underflows for a non-identical pair is floored relative to the largest differential so
// the t-ratio stays finite.
class PairTable {
public:
    PairTable(const Matrix& losses, std::span<const std::vector<std::uint32_t>> indices)
        : m_(losses.cols()), res_(resample_means(losses, indices)), stats_(m_ * m_) {
        const std::size_t n = losses.rows();
        const double inv_b = 1.0 / static_cast<double>(indices.size());
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = i + 1; j < m_; ++j) {
                double max_abs = 0.0;
                for (std::size_t t = 0; t < n; ++t) max_abs = std::max(max_abs, std::abs(losses(t, i) - losses(t, j)));
                if (max_abs == 0.0) continue;
                PairStats s;
                s.valid = true;
                s.dbar = res_.mean[i] - res_.mean[j];
                double var = 0.0;
                for (std::size_t b = 0; b < res_.boot.rows(); ++b) {
                    const double dev = res_.boot(b, i) - res_.boot(b, j) - s.dbar;
                    var += dev * dev;
                }
                var *= inv_b;
                const double floor = 1e-12 * max_abs;
                s.sd = std::sqrt(std::max(var, floor * floor));
                stats_[i * m_ + j] = s;
                s.dbar = -s.dbar;
                stats_[j * m_ + i] = s;
            }
        }
    }

    [[nodiscard]] const PairStats& at(std::size_t i, std::size_t j) const { return stats_[i * m_ + j]; }
    [[nodiscard]] double boot_diff(std::size_t b, std::size_t i, std::size_t j) const {
        return res_.boot(b, i) - res_.boot(b, j);
    }
    [[nodiscard]] std::size_t replicates() const { return res_.boot.rows(); }

private:
    std::size_t m_;
    Resampled res_;
    std::vector<PairStats> stats_;
};

struct StepTest {
    bool any_valid = false;
    TrStatistic t_r;
    double pvalue = 1.0;
};

StepTest step_test(const PairTable& table, std::span<const std::size_t> alive) {
    StepTest out;
    for (std::size_t a = 0; a < alive.size(); ++a) {
        for (std::size_t c = a + 1; c < alive.size(); ++c) {
            const auto& s = table.at(alive[a], alive[c]);
            if (!s.valid) continue;
            const double t = std::abs(s.dbar) / s.sd;
            if (!out.any_valid || t > out.t_r.value) out.t_r = {t, alive[a], alive[c]};
            out.any_valid = true;
        }
    }
    if (!out.any_valid) return out;
    std::size_t exceed = 0;
    for (std::size_t b = 0; b < table.replicates(); ++b) {
        double tb = 0.0;
        for (std::size_t a = 0; a < alive.size(); ++a) {
            for (std::size_t c = a + 1; c < alive.size(); ++c) {
                const auto& s = table.at(alive[a], alive[c]);
                if (!s.valid) continue;
                tb = std::max(tb, std::abs(table.boot_diff(b, alive[a], alive[c]) - s.dbar) / s.sd);
            }
        }
        if (tb >= out.t_r.value) ++exceed;
    }
    out.pvalue = static_cast<double>(exceed) / static_cast<double>(table.replicates());
    return out;
}

}  // namespace

double quantile_loss(double r, double var, double tau) {
    const double z = r - var;
    return z * (tau - (z < 0.0 ? 1.0 : 0.0));
}

LossMatrix loss_matrix(const fc::VaRPanel& panel) {
    if (panel.var.rows() != panel.realized.size()) throw ValidationError("loss_matrix: panel is not aligned");
    LossMatrix out;
    out.tau = panel.tau;
    out.model_ids = panel.model_ids;
    out.losses = Matrix(panel.var.rows(), panel.var.cols());
    for (std::size_t t = 0; t < panel.var.rows(); ++t)
        for (std::size_t j = 0; j < panel.var.cols(); ++j)
            out.losses(t, j) = quantile_loss(panel.realized[t], panel.var(t, j), panel.tau);
    return out;
}

std::size_t block_length(std::span<const std::vector<double>> series, std::size_t max_lag) {
    if (max_lag == 0) throw ValidationError("block_length: max_lag must be positive");
    std::size_t k = 0;
    for (const auto& d : series) k = std::max(k, significant_lags(d, max_lag));
    return std::max<std::size_t>(k, 1);
}

std::size_t block_length(const Matrix& losses, std::size_t max_lag) {
    std::vector<std::vector<double>> diffs;
    for (std::size_t i = 0; i < losses.cols(); ++i) {
        for (std::size_t j = i + 1; j < losses.cols(); ++j) {
            std::vector<double> d(losses.rows());
            for (std::size_t t = 0; t < d.size(); ++t) d[t] = losses(t, i) - losses(t, j);
            diffs.push_back(std::move(d));
        }
    }
    return block_length(diffs, max_lag);
}

std::vector<std::vector<std::uint32_t>> bootstrap_indices(std::size_t n, std::size_t k, std::size_t B,
                                                          std::uint64_t seed) {
    if (k < 1 || n <= k) throw ValidationError("bootstrap_indices: need n > k >= 1");
    if (B < 1) throw ValidationError("bootstrap_indices: B must be positive");
    if (n > UINT32_MAX) throw ValidationError("bootstrap_indices: series too long");
    const std::size_t v = n / k - 1;
    const std::size_t l = n - k * v;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::vector<std::uint32_t>> out(B);
    std::vector<std::size_t> starts(v);
    for (auto& rep : out) {
        rep.reserve(n);
        for (auto& s : starts) s = draw(rng);
        for (std::size_t s : starts)
            for (std::size_t i = 0; i < k; ++i) rep.push_back(static_cast<std::uint32_t>((s + i) % n));
        for (std::size_t i = 0; i < l; ++i) rep.push_back(static_cast<std::uint32_t>(draw(rng)));
    }
    return out;
}

BootstrapVariance bootstrap_variance(std::span<const double> d, std::span<const std::vector<std::uint32_t>> indices) {
    if (d.empty() || indices.empty()) throw ValidationError("bootstrap_variance: empty input");
    BootstrapVariance out;
    out.flagged = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
    const double dbar = varnews::mean(d);
    double acc = 0.0;
    for (const auto& idx : indices) {
        if (idx.size() != d.size()) throw ValidationError("bootstrap_variance: replicate length differs from series");
        double s = 0.0;
        for (std::uint32_t t : idx) {
            if (t >= d.size()) throw ValidationError("bootstrap_variance: index out of range");
            s += d[t];
        }
        const double dev = s / static_cast<double>(d.size()) - dbar;
        acc += dev * dev;
    }
    out.variance = acc / static_cast<double>(indices.size());
    return out;
}

TrStatistic t_r_statistic(const Matrix& losses, std::span<const std::vector<std::uint32_t>> indices) {
    if (losses.cols() < 2) throw ValidationError("t_r_statistic: need at least two models");
    const PairTable table(losses, indices);
    std::vector<std::size_t> all(losses.cols());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    TrStatistic best;
    bool any = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            const auto& s = table.at(i, j);
            if (!s.valid) continue;
            const double t = std::abs(s.dbar) / s.sd;
            if (!any || t > best.value) best = {t, i, j};
            any = true;
        }
    }
    if (!any) throw ValidationError("t_r_statistic: every model pair has identical losses");
    return best;
}

MCSResult mcs_run(const LossMatrix& losses, const MCSConfig& config) {
    const std::size_t n = losses.losses.rows(), m = losses.losses.cols();
    if (m < 2) throw ValidationError("mcs_run: need at least two models");
    if (losses.model_ids.size() != m) throw ValidationError("mcs_run: model ids do not match loss columns");
    if (n < 50) throw ValidationError("mcs_run: need at least 50 observations");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ValidationError("mcs_run: alpha must lie in (0,1)");
    if (config.B < 200) throw ValidationError("mcs_run: B must be at least 200");
    for (double v : losses.losses.data()) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("mcs_run: losses must be finite and non-negative");
    }

    MCSResult result;
    result.block_length = std::min(block_length(losses.losses, config.max_block_lag), n - 1);
    const auto indices = bootstrap_indices(n, result.block_length, config.B, config.seed);
    const PairTable table(losses.losses, indices);

    std::vector<std::size_t> alive(m);
    for (std::size_t j = 0; j < m; ++j) alive[j] = j;
    double running = 0.0;
    bool accepted = false;
    while (alive.size() > 1) {
        const StepTest test = step_test(table, alive);
        if (!test.any_valid) {
            running = 1.0;
            accepted = true;
            break;
        }
        running = std::max(running, test.pvalue);
        if (running >= config.alpha) {
            accepted = true;
            break;
        }
        std::size_t worst = alive.size();
        double worst_score = 0.0;
        for (std::size_t a = 0; a < alive.size(); ++a) {
            bool has = false;
            double sup = 0.0;
            for (std::size_t c = 0; c < alive.size(); ++c) {
                if (c == a) continue;
                const auto& s = table.at(alive[a], alive[c]);
                if (!s.valid) continue;
                const double t = s.dbar / s.sd;
                if (!has || t > sup) sup = t;
                has = true;
            }
            if (has && (worst == alive.size() || sup > worst_score)) {
                worst = a;
                worst_score = sup;
            }
        }
        const std::string& id = losses.model_ids[alive[worst]];
        result.elimination_order.push_back({id, test.t_r.value, running});
        result.pvalues[id] = running;
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    result.final_pvalue = accepted ? running : 1.0;
    for (std::size_t j : alive) {
        result.surviving_ids.push_back(losses.model_ids[j]);
        result.pvalues[losses.model_ids[j]] = result.final_pvalue;
    }
    return result;
}

std::string result_json(const MCSResult& result, const LossMatrix& losses, const MCSConfig& config) {
    nlohmann::ordered_json j;
    j["tau"] = losses.tau;
    j["models"] = losses.model_ids;
    j["config"] = {{"alpha", config.alpha}, {"B", config.B}, {"max_block_lag", config.max_block_lag},
                   {"seed", config.seed}};
    j["block_length"] = result.block_length;
    j["surviving"] = result.surviving_ids;
    j["final_pvalue"] = result.final_pvalue;
    auto trace = nlohmann::ordered_json::array();
    for (const auto& e : result.elimination_order) {
        trace.push_back({{"model", e.model_id}, {"t_r", e.t_r}, {"pvalue", e.pvalue}});
    }
    j["elimination"] = trace;
    auto p = nlohmann::ordered_json::object();
    for (const auto& id : losses.model_ids) p[id] = result.pvalues.at(id);
    j["mcs_pvalues"] = p;
    std::vector<double> avg(losses.losses.cols(), 0.0);
    for (std::size_t t = 0; t < losses.losses.rows(); ++t)
        for (std::size_t c = 0; c < avg.size(); ++c) avg[c] += losses.losses(t, c);
    auto mean_loss = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < avg.size(); ++c) {
        mean_loss[losses.model_ids[c]] = avg[c] / static_cast<double>(losses.losses.rows());
    }
    j["mean_loss"] = mean_loss;
    return j.dump(2) + "\n";
}

std::string composition_csv(std::span<const std::string> sectors, std::span<const MCSResult> results) {
    if (sectors.size() != results.size()) throw ValidationError("composition_csv: one result per sector required");
    auto suffix_of = [](const std::string& id) {
        const auto pos = id.rfind('-');
        return pos == std::string::npos ? std::string() : id.substr(pos + 1);
    };
    csv::Writer w;
    w.row({"sector", "IV", "SE", "N", "count"});
    for (std::size_t s = 0; s < sectors.size(); ++s) {
        const auto& ids = results[s].surviving_ids;
        double iv = 0, se = 0, none = 0;
        for (const auto& id : ids) {
            const auto suf = suffix_of(id);
            if (suf == "IV") ++iv;
            else if (suf == "SE") ++se;
            else if (suf == "N") ++none;
        }
        const double total = static_cast<double>(ids.size());
        auto pct = [&](double c) { return std::to_string(static_cast<long>(std::lround(total > 0 ? 100.0 * c / total : 0.0))); };
        w.row({sectors[s], pct(iv), pct(se), pct(none), std::to_string(ids.size())});
    }
    return w.str();
}

}  // namespace varnews::mcs
