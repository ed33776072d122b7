#include "varnews/estimation.hpp"

#include <doctest.h>

#include <cmath>

using namespace varnews;
using namespace varnews::vol;

TEST_CASE("unconstrained mapping round-trips") {
    const std::vector<std::pair<Dynamics, dist::LawKind>> cases{
        {Dynamics::Garch, dist::LawKind::Gaussian}, {Dynamics::Gjr, dist::LawKind::StudentT},
        {Dynamics::Egarch, dist::LawKind::GED}};
    for (const auto& [dyn, law] : cases) {
        ParamVector p;
        p.mu = 1e-4;
        p.phi = -0.1;
        p.omega = dyn == Dynamics::Egarch ? -0.5 : 2e-6;
        p.alpha = dyn == Dynamics::Egarch ? -0.04 : 0.07;
        p.beta = 0.88;
        p.gamma = dyn == Dynamics::Garch ? 0.0 : 0.06;
        p.shape = law == dist::LawKind::StudentT ? 7.0 : (law == dist::LawKind::GED ? 1.4 : 0.0);
        p.delta = {dyn == Dynamics::Egarch ? -0.02 : 3e-7, 1e-6};
        const auto theta = est::to_unconstrained(p, dyn, law);
        const auto back = est::from_unconstrained(theta, dyn, law, 2);
        CHECK(back.mu == doctest::Approx(p.mu).epsilon(1e-12));
        CHECK(back.phi == doctest::Approx(p.phi).epsilon(1e-12));
        CHECK(back.omega == doctest::Approx(p.omega).epsilon(1e-10));
        CHECK(back.alpha == doctest::Approx(p.alpha).epsilon(1e-10));
        CHECK(back.beta == doctest::Approx(p.beta).epsilon(1e-10));
        CHECK(back.gamma == doctest::Approx(p.gamma).epsilon(1e-10));
        if (law != dist::LawKind::Gaussian) CHECK(back.shape == doctest::Approx(p.shape).epsilon(1e-10));
        for (std::size_t k = 0; k < 2; ++k) CHECK(back.delta[k] == doctest::Approx(p.delta[k]).epsilon(1e-9));
    }
}

TEST_CASE("any unconstrained point maps to admissible parameters") {
    for (double v : {-8.0, -3.0, 0.0, 2.0, 8.0}) {
        for (auto dyn : {Dynamics::Garch, Dynamics::Gjr, Dynamics::Egarch}) {
            for (auto law : {dist::LawKind::Gaussian, dist::LawKind::StudentT, dist::LawKind::GED}) {
                const std::size_t k = free_parameter_count(dyn, law, 1);
                const std::vector<double> theta(k, v);
                const auto p = est::from_unconstrained(theta, dyn, law, 1);
                CHECK(constraint_violation(dyn, law_of(law, p), p, 1).empty());
            }
        }
    }
}

TEST_CASE("information criteria") {
    CHECK(est::aic(-100.0, 5) == doctest::Approx(210.0));
    CHECK(est::bic(-100.0, 5, 1000) == doctest::Approx(200.0 + 5.0 * std::log(1000.0)));
}

TEST_CASE("regressor scaling uses population deviations") {
    Matrix x(4, 2);
    const double a[4] = {1, 2, 3, 4};
    for (std::size_t t = 0; t < 4; ++t) {
        x(t, 0) = a[t];
        x(t, 1) = 7.0;
    }
    const auto s = est::column_scales(x);
    CHECK(s[0] == doctest::Approx(std::sqrt(1.25)));
    CHECK(s[1] == 1.0);
    CHECK(est::scale_columns(x, s)(3, 0) == doctest::Approx(4.0 / std::sqrt(1.25)));
}

TEST_CASE("too little data is a validation error") {
    const std::vector<double> r(50, 0.001);
    CHECK_THROWS_AS((void)est::fit(ModelSpec{}, r, Matrix(), est::FitConfig{}), ValidationError);
    const std::vector<double> flat(300, 0.0);
    CHECK_THROWS_AS((void)est::fit(ModelSpec{}, flat, Matrix(), est::FitConfig{}), ValidationError);
}

TEST_CASE("GARCH fit recovers simulated parameters") {
    ParamVector truth;
    truth.omega = 0.05;
    truth.alpha = 0.10;
    truth.beta = 0.85;
    const auto r = simulate(Dynamics::Garch, dist::ErrorLaw::gaussian(), truth, 4000, 99, Matrix());
    est::FitConfig cfg;
    cfg.seed = 4;
    const auto fm = est::fit(ModelSpec{}, r, Matrix(), cfg);
    CHECK(fm.converged);
    CHECK(fm.loglik >= log_likelihood(Dynamics::Garch, dist::ErrorLaw::gaussian(), truth, r, Matrix()));
    CHECK(std::abs(fm.params.alpha - 0.10) < 0.1);
    CHECK(std::abs(fm.params.beta - 0.85) < 0.1);
    CHECK(fm.loglik >= fm.start_logliks.front());
    for (std::size_t i = 1; i < fm.trace.size(); ++i) CHECK(fm.trace[i] >= fm.trace[i - 1]);
    CHECK(fm.aic == doctest::Approx(est::aic(fm.loglik, 5)));

    const auto again = est::fit(ModelSpec{}, r, Matrix(), cfg);
    CHECK(again.params == fm.params);

    est::FitConfig warm = cfg;
    warm.initial = fm.params;
    const auto w = est::fit(ModelSpec{}, r, Matrix(), warm);
    CHECK(w.loglik >= fm.loglik - 1e-6);
}
