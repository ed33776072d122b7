#include "support.hpp"
#include "varnews/csv.hpp"
#include "varnews/estimation.hpp"
#include "varnews/forecasting.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace varnews;
using namespace varnews::vol;

namespace {

est::FittedModel fixed_model(const ModelSpec& spec, const ParamVector& p, std::span<const double> window,
                             std::vector<double> scales = {}) {
    est::FittedModel fm;
    fm.spec = spec;
    fm.params = p;
    fm.regressor_scales = std::move(scales);
    fm.init = default_init(window);
    return fm;
}

}  // namespace

TEST_CASE("one-step forecast extends the filter by one observation") {
    ParamVector p;
    p.mu = 1e-4;
    p.phi = 0.05;
    p.omega = -0.4;
    p.alpha = -0.05;
    p.gamma = 0.12;
    p.beta = 0.96;
    p.shape = 6.0;
    p.delta = {0.02, -0.01};
    const ModelSpec spec{Dynamics::Egarch, dist::LawKind::StudentT, RegressorKind::InfoVolume};
    testing_support::Lcg u(17);
    const std::size_t n = 301;
    std::vector<double> r(n);
    for (auto& v : r) v = 0.01 * (u.next() - 0.5);
    Matrix x(n, 2);
    for (std::size_t t = 0; t < n; ++t) {
        x(t, 0) = std::floor(10 * u.next());
        x(t, 1) = 1000 * u.next();
    }
    const std::vector<double> scales{2.0, 300.0};
    const std::span<const double> window(r.data(), n - 1);
    const auto fm = fixed_model(spec, p, window, scales);

    const Matrix xs = est::scale_columns(x, scales);
    const auto full = filter(spec.dynamics, law_of(spec.law, p), p, r, xs, fm.init);
    const auto state = fc::filter_state(fm, window, x.slice_rows(0, n - 1));
    const auto f = fc::forecast_one_step(fm, state, x.row(n - 1));
    CHECK(f.sigma2 == doctest::Approx(full.sigma2[n - 1]).epsilon(1e-12));
    CHECK(f.mu == doctest::Approx(p.mu + p.phi * r[n - 2]).epsilon(1e-14));

    const auto next = fc::advance(f, r[n - 1]);
    CHECK(next.last_return == r[n - 1]);
    CHECK(next.last_eps == doctest::Approx(full.eps[n - 1]).epsilon(1e-12));
    CHECK(next.last_sigma2 == f.sigma2);
}

TEST_CASE("VaR is the location-scale quantile") {
    const double v = fc::var_forecast(0.001, 4e-6, dist::ErrorLaw::gaussian(), 0.01);
    CHECK(v == doctest::Approx(0.001 + 2e-3 * -2.3263478740408408).epsilon(1e-12));
}

TEST_CASE("rolling run produces aligned panels and CSVs round-trip") {
    ParamVector p;
    p.omega = 0.05;
    p.alpha = 0.08;
    p.beta = 0.9;
    const std::size_t n = 600;
    const auto r = simulate(Dynamics::Garch, dist::ErrorLaw::gaussian(), p, n, 8, Matrix());
    std::vector<std::int64_t> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = 300 * static_cast<std::int64_t>(i + 1);
    const std::vector<ModelSpec> specs{{Dynamics::Garch, dist::LawKind::Gaussian, RegressorKind::None},
                                       {Dynamics::Gjr, dist::LawKind::StudentT, RegressorKind::None}};
    const std::vector<Matrix> regs(2);
    fc::RollConfig rc;
    rc.refit_every = 150;
    rc.threads = 1;
    est::FitConfig fit;
    fit.starts = 1;
    fit.max_iterations = 1500;
    const auto res = fc::rolling_run(specs, r, ts, regs, rc, fit);
    CHECK(res.insample_size == 300);
    CHECK(res.refits_per_model == 2);
    REQUIRE(res.panels.size() == 2);
    const auto& panel = res.panels[0];
    CHECK(panel.tau == 0.01);
    CHECK(panel.timestamps.front() == ts[300]);
    CHECK(panel.realized.front() == r[300]);
    CHECK(panel.var.rows() == 300);
    CHECK(panel.model_ids == std::vector<std::string>{"GARCH-N-N", "GJR-T-N"});
    for (std::size_t t = 0; t < 300; ++t) {
        CHECK(res.panels[1].var(t, 0) < panel.var(t, 0));
        CHECK(panel.sigma2_hat(t, 0) > 0.0);
    }
    CHECK(res.failures.empty());

    const auto dir = testing_support::temp_dir("panel");
    csv::write_file(dir / "var.csv", fc::panel_var_csv(panel));
    csv::write_file(dir / "s2.csv", fc::panel_sigma2_csv(panel));
    const auto back = fc::read_panel(dir / "var.csv", dir / "s2.csv", 0.01);
    CHECK(back.var == panel.var);
    CHECK(back.sigma2_hat == panel.sigma2_hat);
    CHECK(back.timestamps == panel.timestamps);
    const std::vector<std::size_t> cols{1};
    CHECK(panel.select(cols).model_ids == std::vector<std::string>{"GJR-T-N"});
    std::filesystem::remove_all(dir);

    const auto again = fc::rolling_run(specs, r, ts, regs, rc, fit);
    CHECK(again.panels[0].var == panel.var);
}

TEST_CASE("a model whose refit fails is excluded") {
    const std::size_t n = 400;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = (i % 2 ? 0.001 : -0.001) * (1.0 + 0.1 * static_cast<double>(i % 7));
    std::vector<std::int64_t> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<std::int64_t>(i + 1);
    const std::vector<ModelSpec> specs{{Dynamics::Garch, dist::LawKind::Gaussian, RegressorKind::None},
                                       {Dynamics::Garch, dist::LawKind::Gaussian, RegressorKind::Sentiment}};
    std::vector<Matrix> regs{Matrix(), Matrix(n, 3, 0.0)};
    for (std::size_t i = 200; i < n; ++i) regs[1](i, 0) = std::nan("");
    fc::RollConfig rc;
    rc.refit_every = 100;
    rc.threads = 1;
    est::FitConfig fit;
    fit.starts = 1;
    fit.max_iterations = 300;
    const auto res = fc::rolling_run(specs, r, ts, regs, rc, fit);
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].model_id == "GARCH-N-SE");
    CHECK(res.excluded == std::vector<std::string>{"GARCH-N-SE"});
    CHECK(res.panels[0].model_ids == std::vector<std::string>{"GARCH-N-N"});
}
