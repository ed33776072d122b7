#include "varnews/forecasting.hpp"

#include "varnews/csv.hpp"

#include <cmath>

namespace varnews::fc {

namespace {

std::vector<double> scaled_row(const est::FittedModel& fitted, std::span<const double> x) {
    if (x.size() != fitted.regressor_scales.size()) {
        throw ValidationError("forecast: covariate row has " + std::to_string(x.size()) + " entries, model expects " +
                              std::to_string(fitted.regressor_scales.size()));
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / fitted.regressor_scales[i];
    return out;
}

std::string panel_csv(const VaRPanel& panel, const Matrix& values) {
    csv::Writer w;
    std::vector<std::string> header{"timestamp", "realized"};
    header.insert(header.end(), panel.model_ids.begin(), panel.model_ids.end());
    w.row(header);
    for (std::size_t t = 0; t < panel.timestamps.size(); ++t) {
        std::vector<std::string> row{std::to_string(panel.timestamps[t]), csv::format_double(panel.realized[t])};
        for (std::size_t j = 0; j < values.cols(); ++j) row.push_back(csv::format_double(values(t, j)));
        w.row(row);
    }
    return w.str();
}

struct ParsedPanel {
    std::vector<std::string> ids;
    std::vector<std::int64_t> timestamps;
    std::vector<double> realized;
    Matrix values;
};

ParsedPanel parse_panel(const std::filesystem::path& path) {
    const auto records = csv::parse(csv::read_file(path), path.string());
    if (records.empty() || records[0].fields.size() < 2 || records[0].fields[0] != "timestamp" ||
        records[0].fields[1] != "realized") {
        throw ValidationError(path.string() + ": expected header timestamp,realized,<model>...");
    }
    ParsedPanel out;
    out.ids.assign(records[0].fields.begin() + 2, records[0].fields.end());
    out.values = Matrix(records.size() - 1, out.ids.size());
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = path.string() + ":" + std::to_string(rec.line) + ": ";
        if (rec.fields.size() != out.ids.size() + 2) throw ValidationError(where + "wrong field count");
        std::int64_t ts = 0;
        double realized = 0.0;
        if (!csv::parse_int(rec.fields[0], ts) || !csv::parse_double(rec.fields[1], realized)) {
            throw ValidationError(where + "malformed timestamp or realized value");
        }
        out.timestamps.push_back(ts);
        out.realized.push_back(realized);
        for (std::size_t j = 0; j < out.ids.size(); ++j) {
            if (!csv::parse_double(rec.fields[j + 2], out.values(r - 1, j))) {
                throw ValidationError(where + "malformed value for " + out.ids[j]);
            }
        }
    }
    return out;
}

}  // namespace

FilterState filter_state(const est::FittedModel& fitted, std::span<const double> returns, const Matrix& regressors) {
    if (returns.empty()) throw ValidationError("filter_state: no returns");
    const Matrix x = est::scale_columns(regressors, fitted.regressor_scales);
    const auto out = vol::filter(fitted.spec.dynamics, vol::law_of(fitted.spec.law, fitted.params), fitted.params,
                                 returns, x, fitted.init);
    return {returns.back(), out.eps.back(), out.sigma2.back()};
}

OneStep forecast_one_step(const est::FittedModel& fitted, const FilterState& state, std::span<const double> x_next) {
    const auto& p = fitted.params;
    const auto law = vol::law_of(fitted.spec.law, p);
    const auto x = scaled_row(fitted, x_next);
    const double m = fitted.spec.dynamics == vol::Dynamics::Egarch ? dist::abs_moment(law) : 0.0;
    OneStep out;
    out.mu = p.mu + p.phi * state.last_return;
    out.sigma2 = vol::next_variance(fitted.spec.dynamics, p, m, state.last_eps, state.last_sigma2, x);
    if (!std::isfinite(out.mu) || !(out.sigma2 > 0.0) || !std::isfinite(out.sigma2)) {
        throw NumericalError("forecast_one_step: non-finite forecast for " + fitted.spec.id());
    }
    return out;
}

FilterState advance(const OneStep& forecast, double realized) {
    return {realized, realized - forecast.mu, forecast.sigma2};
}

double var_forecast(double mu, double sigma2, const dist::ErrorLaw& law, double tau) {
    if (!(sigma2 > 0.0)) throw ValidationError("var_forecast: sigma2 must be positive");
    return mu + std::sqrt(sigma2) * dist::quantile(law, tau);
}

VaRPanel VaRPanel::select(std::span<const std::size_t> columns) const {
    VaRPanel out;
    out.tau = tau;
    out.timestamps = timestamps;
    out.realized = realized;
    for (std::size_t c : columns) {
        if (c >= model_ids.size()) throw ValidationError("VaRPanel::select: column out of range");
        out.model_ids.push_back(model_ids[c]);
    }
    out.var = var.select_columns(columns);
    out.sigma2_hat = sigma2_hat.select_columns(columns);
    return out;
}

RollResult rolling_run(std::span<const vol::ModelSpec> specs, std::span<const double> returns,
                       std::span<const std::int64_t> timestamps, std::span<const Matrix> regressors,
                       const RollConfig& config, const est::FitConfig& fit) {
    if (specs.empty()) throw ValidationError("rolling_run: no models");
    if (regressors.size() != specs.size()) throw ValidationError("rolling_run: one regressor matrix per model required");
    if (timestamps.size() != returns.size()) throw ValidationError("rolling_run: timestamps and returns differ in length");
    if (!(config.insample_fraction > 0.0 && config.insample_fraction < 1.0)) {
        throw ValidationError("rolling_run: insample_fraction must lie in (0,1)");
    }
    if (config.refit_every == 0) throw ValidationError("rolling_run: refit_every must be positive");
    if (config.taus.empty()) throw ValidationError("rolling_run: no confidence levels");
    for (double tau : config.taus) {
        if (!(tau > 0.0 && tau < 0.5)) throw ValidationError("rolling_run: tau must lie in (0, 0.5)");
    }
    const std::size_t n = returns.size();
    const auto window = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.insample_fraction));
    if (window < fit.min_obs || window >= n) {
        throw ValidationError("rolling_run: in-sample window of " + std::to_string(window) + " bars out of " +
                              std::to_string(n) + " is unusable");
    }
    const std::size_t steps = n - window;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        const std::size_t cols = vol::regressor_columns(specs[j].regressors);
        if (regressors[j].cols() != cols || (cols > 0 && regressors[j].rows() != n)) {
            throw ValidationError("rolling_run: regressors for " + specs[j].id() + " have the wrong shape");
        }
    }

    struct Column {
        std::vector<std::vector<double>> var;  // per tau
        std::vector<double> sigma2;
        bool failed = false;
        RollFailure failure;
        std::size_t unconverged = 0;
    };
    std::vector<Column> columns(specs.size());

    parallel_for(specs.size(), config.threads, [&](std::size_t j) {
        const auto& spec = specs[j];
        const Matrix& x_all = regressors[j];
        const std::size_t cols = x_all.cols();
        Column& col = columns[j];
        col.var.assign(config.taus.size(), std::vector<double>(steps));
        col.sigma2.resize(steps);

        est::FittedModel fitted;
        FilterState state;
        std::vector<double> z_tau(config.taus.size());
        std::size_t refit = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t t = window + s;
            try {
                if (s % config.refit_every == 0) {
                    const auto r_window = returns.subspan(t - window, window);
                    const Matrix x_window = cols > 0 ? x_all.slice_rows(t - window, window) : Matrix(0, 0);
                    est::FitConfig fc = fit;
                    fc.seed = derive_seed(fit.seed, spec.id() + "/refit-" + std::to_string(refit));
                    if (refit > 0) fc.initial = fitted.params;
                    fitted = est::fit(spec, r_window, x_window, fc);
                    if (!fitted.converged) ++col.unconverged;
                    state = filter_state(fitted, r_window, x_window);
                    const auto law = vol::law_of(spec.law, fitted.params);
                    for (std::size_t k = 0; k < config.taus.size(); ++k) z_tau[k] = dist::quantile(law, config.taus[k]);
                    ++refit;
                }
                const auto x_next = cols > 0 ? x_all.row(t) : std::span<const double>{};
                const OneStep f = forecast_one_step(fitted, state, x_next);
                const double sd = std::sqrt(f.sigma2);
                for (std::size_t k = 0; k < config.taus.size(); ++k) col.var[k][s] = f.mu + sd * z_tau[k];
                col.sigma2[s] = f.sigma2;
                state = advance(f, returns[t]);
            } catch (const std::exception& e) {
                col.failed = true;
                col.failure = {spec.id(), s, e.what()};
                return;
            }
        }
    });

    RollResult result;
    result.insample_size = window;
    result.refits_per_model = (steps + config.refit_every - 1) / config.refit_every;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        result.unconverged_fits += columns[j].unconverged;
        if (columns[j].failed) {
            result.failures.push_back(columns[j].failure);
            result.excluded.push_back(specs[j].id());
        } else {
            kept.push_back(j);
        }
    }
    for (std::size_t k = 0; k < config.taus.size(); ++k) {
        VaRPanel panel;
        panel.tau = config.taus[k];
        panel.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(window), timestamps.end());
        panel.realized.assign(returns.begin() + static_cast<std::ptrdiff_t>(window), returns.end());
        panel.var = Matrix(steps, kept.size());
        panel.sigma2_hat = Matrix(steps, kept.size());
        for (std::size_t c = 0; c < kept.size(); ++c) {
            panel.model_ids.push_back(specs[kept[c]].id());
            panel.var.set_column(c, columns[kept[c]].var[k]);
            panel.sigma2_hat.set_column(c, columns[kept[c]].sigma2);
        }
        result.panels.push_back(std::move(panel));
    }
    return result;
}

std::string panel_var_csv(const VaRPanel& panel) { return panel_csv(panel, panel.var); }
std::string panel_sigma2_csv(const VaRPanel& panel) { return panel_csv(panel, panel.sigma2_hat); }

VaRPanel read_panel(const std::filesystem::path& var_csv, const std::filesystem::path& sigma2_csv, double tau) {
    auto v = parse_panel(var_csv);
    auto s = parse_panel(sigma2_csv);
    if (v.ids != s.ids || v.timestamps != s.timestamps) {
        throw ValidationError("read_panel: VaR and variance files are not aligned");
    }
    VaRPanel panel;
    panel.tau = tau;
    panel.model_ids = std::move(v.ids);
    panel.timestamps = std::move(v.timestamps);
    panel.realized = std::move(v.realized);
    panel.var = std::move(v.values);
    panel.sigma2_hat = std::move(s.values);
    return panel;
}

}  // namespace varnews::fc
