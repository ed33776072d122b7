// Acceptance run: one PASS/FAIL line per criterion; exit status 1 when any criterion fails.

#include "support.hpp"
#include "varnews/backtest.hpp"
#include "varnews/combine.hpp"
#include "varnews/csv.hpp"
#include "varnews/distributions.hpp"
#include "varnews/estimation.hpp"
#include "varnews/forecasting.hpp"
#include "varnews/mcs.hpp"
#include "varnews/sentiment.hpp"
#include "varnews/volatility.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

using namespace varnews;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1 --------------------------------------------------------------------------------------------
void distributions(Outcome& o) {
    using dist::ErrorLaw;
    std::vector<ErrorLaw> laws{ErrorLaw::gaussian()};
    for (double nu : {0.8, 1.0, 1.5, 2.0, 3.0}) laws.push_back(ErrorLaw::ged(nu));
    for (double nu : {2.5, 5.0, 10.0, 50.0}) laws.push_back(ErrorLaw::student_t(nu));
    double worst_mass = 0, worst_var = 0, worst_inv = 0;
    std::size_t unrepresentable = 0;
    for (const auto& law : laws) {
        // Symmetric laws: twice the half-line integral; exp-sinh copes with the slow z^2 tails of small-nu t.
        boost::math::quadrature::exp_sinh<double> half;
        const double mass = 2.0 * half.integrate([&](double z) { return dist::pdf(law, z); });
        const double var = 2.0 * half.integrate([&](double z) { return z * z * dist::pdf(law, z); });
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        worst_var = std::max(worst_var, std::abs(var - 1.0));
        // Above 0, F(z) carries an absolute rounding error of one ulp of 1, so z is only recoverable to
        // about eps / pdf(z); that floor is added to the 1e-6 bound.
        for (double z = -6.0; z <= 6.0 + 1e-12; z += 0.05) {
            const double p = dist::cdf(law, z);
            if (p == 1.0) {
                ++unrepresentable;
                continue;
            }
            const double err = std::abs(dist::quantile(law, p) - z);
            const double floor = z > 0.0 ? 4.0 * std::numeric_limits<double>::epsilon() / dist::pdf(law, z) : 0.0;
            worst_inv = std::max(worst_inv, err / (1e-6 + floor) * 1e-6);
        }
    }
    double worst_ged2 = 0;
    for (double z = -6.0; z <= 6.0 + 1e-12; z += 0.01) {
        worst_ged2 = std::max(worst_ged2, std::abs(dist::pdf(ErrorLaw::ged(2.0), z) - dist::pdf(ErrorLaw::gaussian(), z)));
    }
    o.detail << "laws=" << laws.size() << " max|mass-1|=" << worst_mass << " max|var-1|=" << worst_var
             << " max|q(F(z))-z|=" << worst_inv << " (F(z)=1 at " << unrepresentable << " points)" << " max|GED2-N|=" << worst_ged2;
    o.require(worst_mass <= 1e-6, "mass");
    o.require(worst_var <= 1e-6, "variance");
    o.require(worst_inv <= 1e-6, "quantile inverts cdf");
    o.require(worst_ged2 <= 1e-12, "GED(2) equals Gaussian");
}

// 2 --------------------------------------------------------------------------------------------
void likelihood(Outcome& o) {
    const auto doc = nlohmann::json::parse(csv::read_file(std::string(VARNEWS_TEST_DATA) + "/likelihood_cases.json"));
    const std::size_t n = doc["n"];
    double worst = 0;
    std::size_t count = 0;
    for (const auto& c : doc["cases"]) {
        const auto& j = c["params"];
        vol::ParamVector p;
        p.mu = j["mu"];
        p.phi = j["phi"];
        p.omega = j["omega"];
        p.alpha = j["alpha"];
        p.beta = j["beta"];
        p.gamma = j["gamma"];
        p.shape = j["shape"];
        p.delta = j["delta"].get<std::vector<double>>();
        testing_support::Lcg u(c["seed"].get<std::uint64_t>());
        std::vector<double> r(n);
        for (auto& v : r) v = 0.02 * (u.next() - 0.5);
        Matrix x(p.delta.empty() ? 0 : n, p.delta.size());
        for (std::size_t t = 0; t < x.rows(); ++t)
            for (std::size_t k = 0; k < x.cols(); ++k) x(t, k) = std::floor(u.next() * 4.0);
        const auto dyn = vol::dynamics_from_string(c["dynamics"].get<std::string>());
        const auto law = vol::law_of(dist::law_kind_from_string(c["law"].get<std::string>()), p);
        worst = std::max(worst, std::abs(vol::log_likelihood(dyn, law, p, r, x) - c["loglik"].get<double>()));
        ++count;
    }
    o.detail << "cases=" << count << " n=" << n << " max|ll-oracle|=" << worst;
    o.require(count == 20, "20 cases");
    o.require(worst <= 1e-10, "1e-10 agreement");
}

// 3 --------------------------------------------------------------------------------------------
void recovery(Outcome& o) {
    struct Case {
        const char* name;
        vol::Dynamics dyn;
        vol::ParamVector truth;
        double tol;
    };
    vol::ParamVector garch, gjr, egarch;
    garch.omega = 0.05, garch.alpha = 0.10, garch.beta = 0.85;
    gjr.omega = 0.05, gjr.alpha = 0.05, gjr.gamma = 0.10, gjr.beta = 0.85;
    egarch.omega = 0.01, egarch.alpha = -0.08, egarch.gamma = 0.15, egarch.beta = 0.95;
    const std::vector<Case> cases{{"GARCH", vol::Dynamics::Garch, garch, 0.05},
                                  {"GJR", vol::Dynamics::Gjr, gjr, 0.08},
                                  {"EGARCH", vol::Dynamics::Egarch, egarch, 0.08}};
    for (const auto& c : cases) {
        std::vector<double> da, db, dg;
        for (int s = 0; s < 10; ++s) {
            const auto seed = derive_seed(2024, std::string("recovery/") + c.name + "/" + std::to_string(s));
            const auto r = vol::simulate(c.dyn, dist::ErrorLaw::gaussian(), c.truth, 5000, seed, Matrix());
            est::FitConfig cfg;
            cfg.seed = seed;
            const auto fm = est::fit({c.dyn, dist::LawKind::Gaussian, vol::RegressorKind::None}, r, Matrix(), cfg);
            da.push_back(std::abs(fm.params.alpha - c.truth.alpha));
            db.push_back(std::abs(fm.params.beta - c.truth.beta));
            dg.push_back(std::abs(fm.params.gamma - c.truth.gamma));
        }
        const double ma = median(da), mb = median(db), mg = median(dg);
        o.detail << " " << c.name << ": med|da|=" << ma << " med|db|=" << mb;
        if (c.dyn != vol::Dynamics::Garch) o.detail << " med|dg|=" << mg;
        o.require(ma <= c.tol && mb <= c.tol, std::string(c.name) + " alpha/beta");
        if (c.dyn != vol::Dynamics::Garch) o.require(mg <= c.tol, std::string(c.name) + " gamma");
    }
}

// 4 --------------------------------------------------------------------------------------------
void coverage(Outcome& o) {
    vol::ParamVector p;
    p.omega = 0.05, p.alpha = 0.10, p.beta = 0.85;
    const auto r = vol::simulate(vol::Dynamics::Garch, dist::ErrorLaw::gaussian(), p, 4000, 77, Matrix());
    std::vector<std::int64_t> ts(r.size());
    std::iota(ts.begin(), ts.end(), 1);
    const std::vector<vol::ModelSpec> specs{{}};
    const std::vector<Matrix> regs(1);
    fc::RollConfig rc;
    rc.taus = {0.01, 0.001};
    est::FitConfig fit;
    fit.seed = 5;
    const auto res = fc::rolling_run(specs, r, ts, regs, rc, fit);
    const auto h1 = bt::hits(res.panels[0].realized, res.panels[0].var.column(0), 0.01);
    const auto h2 = bt::hits(res.panels[1].realized, res.panels[1].var.column(0), 0.001);
    o.detail << "steps=" << h1.n() << " refits=" << res.refits_per_model << " violations(1%)=" << h1.count()
             << " A/E=" << bt::ae_ratio(h1) << " violations(0.1%)=" << h2.count();
    o.require(h1.n() == 2000, "2000 out-of-sample steps");
    o.require(h1.count() >= 9 && h1.count() <= 32, "binomial band");
    o.require(bt::ae_ratio(h1) >= 0.45 && bt::ae_ratio(h1) <= 1.6, "A/E");
    o.require(h2.count() <= 8, "0.1% violations");
}

// 5 --------------------------------------------------------------------------------------------
void backtests(Outcome& o) {
    bt::HitSeries zero;
    zero.hits.assign(100, 0);
    zero.tau = 0.01;
    const auto uc = bt::kupiec_uc(zero);
    o.detail << "UC=" << uc.stat << "/" << uc.pvalue;
    o.require(std::abs(uc.stat - 2.01007) <= 1e-4 && std::abs(uc.pvalue - 0.1562) <= 1e-3, "Kupiec");

    bt::HitSeries clustered;
    clustered.hits = {1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
    clustered.tau = 0.1;
    const auto cc = bt::christoffersen_cc(clustered);
    o.require(std::abs(cc.stat - 8.567075589993063) <= 1e-8 && std::abs(cc.pvalue - 0.013793776111078904) <= 1e-8,
              "CC oracle");

    bt::HitSeries h30;
    h30.hits = {0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
    h30.tau = 0.1;
    std::vector<double> var30(30);
    for (std::size_t t = 0; t < 30; ++t) var30[t] = -1.0 - 0.1 * static_cast<double>((7 * t) % 5);
    bt::DqOptions lag2;
    lag2.lags = 2;
    const auto dq = bt::engle_manganelli_dq(h30, var30, lag2);
    o.require(std::abs(dq.stat - 8.362277219037592) <= 1e-8 && std::abs(dq.pvalue - 0.07917348919255404) <= 1e-8 &&
                  dq.df == 4,
              "DQ oracle");
    o.detail << " CC=" << cc.stat << " DQ=" << dq.stat;

    // Size: correctly specified constant VaR on i.i.d. Gaussian returns.
    const double tau = 0.05;
    const double q = dist::quantile(dist::ErrorLaw::gaussian(), tau);
    std::size_t rejections = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto r = dist::sample(dist::ErrorLaw::gaussian(), derive_seed(99, "dq-size/" + std::to_string(rep)), 1000);
        const std::vector<double> var(r.size(), q);
        const auto res = bt::engle_manganelli_dq(bt::hits(r, var, tau), var);
        rejections += res.pvalue < 0.05;
    }
    const double size = static_cast<double>(rejections) / 200.0;
    o.detail << " DQ size=" << size;
    o.require(size >= 0.02 && size <= 0.09, "DQ size");
}

// 6 --------------------------------------------------------------------------------------------
void bootstrap(Outcome& o) {
    const std::size_t n = 500;
    const auto d = dist::sample(dist::ErrorLaw::gaussian(), 31, n);
    const auto idx = mcs::bootstrap_indices(n, 1, 2000, 32);
    bool shapes = idx.size() == 2000;
    for (const auto& rep : idx) {
        shapes = shapes && rep.size() == n && std::all_of(rep.begin(), rep.end(), [&](auto i) { return i < n; });
    }
    const double boot = mcs::bootstrap_variance(d, idx).variance;
    const double ref = population_variance(d) * static_cast<double>(n) / static_cast<double>(n - 1) / static_cast<double>(n);
    const double rel = std::abs(boot / ref - 1.0);
    o.detail << "boot var=" << boot << " sample_var/n=" << ref << " rel.err=" << rel;
    o.require(shapes, "replicate shapes");
    o.require(rel <= 0.15, "variance within 15%");

    const auto doc = nlohmann::json::parse(csv::read_file(std::string(VARNEWS_TEST_DATA) + "/bootstrap_cases.json"));
    std::size_t replayed = 0, wraps = 0;
    bool exact = true;
    for (const auto& c : doc["cases"]) {
        const auto got = mcs::bootstrap_indices(c["n"], c["k"], c["B"], c["seed"].get<std::uint64_t>());
        exact = exact && got == c["indices"].get<std::vector<std::vector<std::uint32_t>>>();
        wraps += c["wraps"].get<std::size_t>();
        ++replayed;
    }
    o.detail << " replayed cases=" << replayed << " wrap-arounds=" << wraps;
    o.require(exact && wraps > 0, "exact replay of wrap-around cases");
}

// 7 --------------------------------------------------------------------------------------------
mcs::LossMatrix loss_panel(std::size_t n, std::array<double, 3> scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> common;
    std::normal_distribution<double> noise(0.0, 0.5);
    mcs::LossMatrix lm;
    lm.losses = Matrix(n, 3);
    lm.model_ids = {"superior", "other1", "other2"};
    for (std::size_t t = 0; t < n; ++t) {
        const double e = common(rng);
        for (std::size_t j = 0; j < 3; ++j) lm.losses(t, j) = scale[j] * e * std::exp(noise(rng) - 0.125);
    }
    return lm;
}

void mcs_discrimination(Outcome& o) {
    mcs::MCSConfig cfg;
    cfg.alpha = 0.25;
    std::size_t alone = 0;
    for (int s = 0; s < 20; ++s) {
        cfg.seed = derive_seed(7, "mcs-seed/" + std::to_string(s));
        const auto lm = loss_panel(1000, {0.9, 1.0, 1.0}, derive_seed(7, "mcs-panel/" + std::to_string(s)));
        const auto res = mcs::mcs_run(lm, cfg);
        alone += res.surviving_ids == std::vector<std::string>{"superior"};
    }
    o.detail << "superior alone in " << alone << "/20";
    o.require(alone >= 18, ">= 90% of seeds");

    auto same = loss_panel(1000, {1.0, 1.0, 1.0}, 3);
    for (std::size_t t = 0; t < same.losses.rows(); ++t) same.losses(t, 1) = same.losses(t, 2) = same.losses(t, 0);
    const auto res = mcs::mcs_run(same, cfg);
    bool all_one = true;
    for (const auto& [id, p] : res.pvalues) all_one = all_one && p == 1.0;
    o.detail << "; identical models: " << res.surviving_ids.size() << " survive";
    o.require(res.surviving_ids.size() == 3 && all_one, "identical models survive with p = 1");
}

// 8 --------------------------------------------------------------------------------------------
void combination(Outcome& o) {
    const double tau = 0.01;
    double worst_gap = -std::numeric_limits<double>::infinity();
    bool simplex = true, bracketed = true;
    int above = 0;
    for (int panel = 0; panel < 10; ++panel) {
        const std::uint64_t seed = derive_seed(8, "combination/" + std::to_string(panel));
        const std::size_t n = 750, m = 4;
        vol::ParamVector p;
        p.omega = 0.05, p.alpha = 0.1, p.beta = 0.85;
        const auto r = vol::simulate(vol::Dynamics::Garch, dist::ErrorLaw::student_t(6.0), p, n + 1, seed, Matrix());
        const auto truth = vol::filter(vol::Dynamics::Garch, dist::ErrorLaw::student_t(6.0), p, r, Matrix());
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> z(0.0, 0.15);
        Matrix var(n, m), s2(n, m);
        std::vector<double> realized(r.begin() + 1, r.end());
        for (std::size_t j = 0; j < m; ++j) {
            const double bias = 0.75 + 0.15 * static_cast<double>(j);
            const auto law = j % 2 ? dist::ErrorLaw::gaussian() : dist::ErrorLaw::student_t(5.0);
            const double q = dist::quantile(law, tau);
            for (std::size_t t = 0; t < n; ++t) {
                const double sd = std::sqrt(truth.sigma2[t + 1]) * bias * std::exp(z(rng));
                s2(t, j) = sd * sd;
                var(t, j) = sd * q;
            }
        }
        const auto fit = comb::optimize_kappa(var, realized, s2, tau, -1.0);
        const auto w = comb::dynamic_weights(var, realized, s2, fit.kappa, tau, -1.0);
        const auto dyn = comb::combine(var, w.weights);
        const auto avg = comb::static_average(var);
        for (std::size_t t = 0; t < n; ++t) {
            const auto row = w.weights.row(t);
            const double sum = std::accumulate(row.begin(), row.end(), 0.0);
            simplex = simplex && std::abs(sum - 1.0) <= 1e-12 &&
                      std::all_of(row.begin(), row.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
            const auto v = var.row(t);
            bracketed = bracketed && dyn[t] >= *std::min_element(v.begin(), v.end()) &&
                        dyn[t] <= *std::max_element(v.begin(), v.end());
        }
        const double gap = comb::average_loss(realized, dyn, tau) - comb::average_loss(realized, avg, tau);
        worst_gap = std::max(worst_gap, gap);
        above += gap > 1e-9;
    }
    o.detail << "panels=10 max(loss_dyn - loss_avg)=" << worst_gap << " panels above tolerance=" << above;
    o.require(simplex, "weights on the simplex");
    o.require(bracketed, "var_dyn bracketed");
    o.require(worst_gap <= 1e-9, "dynamic loss <= average loss + 1e-9");
}

// 9 --------------------------------------------------------------------------------------------
void sentiment(Outcome& o) {
    using sent::QClass;
    using sent::SClass;
    auto lh = [](std::string text, SClass s, QClass q) {
        sent::LabeledHeadline x;
        x.headline.text = std::move(text);
        x.s_class = s;
        x.q_class = q;
        return x;
    };
    const std::vector<sent::LabeledHeadline> uniform{
        lh("shares up", SClass::Positive, QClass::High), lh("shares down", SClass::Negative, QClass::Low),
        lh("shares flat", SClass::Neutral, QClass::High), lh("shares", SClass::Neutral, QClass::Low)};
    const auto cu = sent::corpus_statistics(uniform);
    const bool zero = sent::fisher_score_s(cu.words.at("shares"), cu.sizes) == 0.0 &&
                      sent::fisher_score_q(cu.words.at("shares"), cu.sizes) == 0.0;
    o.require(zero, "class-uniform word scores zero");

    const std::vector<sent::LabeledHeadline> toy{
        lh("profit beats forecast", SClass::Positive, QClass::High),
        lh("profit surges, profit record", SClass::Positive, QClass::High),
        lh("Record profit", SClass::Positive, QClass::Low),
        lh("loss widens", SClass::Negative, QClass::High),
        lh("loss warning; profit", SClass::Negative, QClass::High),
        lh("CEO resigns after loss", SClass::Negative, QClass::Low),
        lh("annual meeting 2023", SClass::Neutral, QClass::Low),
        lh("meeting record", SClass::Neutral, QClass::Low),
        lh("profit meeting", SClass::Neutral, QClass::High)};
    const std::map<std::string, std::pair<double, double>> want{{"profit", {3.0, 1.8409090909090908}},
                                                                {"loss", {666666666.6666666, 0.10384615384615387}},
                                                                {"meeting", {666666666.6666666, 0.4499999999999999}},
                                                                {"record", {1.5, 0.4499999999999999}},
                                                                {"ceo", {0.9999999999999998, 0.75}}};
    const auto ct = sent::corpus_statistics(toy);
    double worst = 0;
    for (const auto& [word, sq] : want) {
        const auto& st = ct.words.at(word);
        worst = std::max(worst, std::abs(sent::fisher_score_s(st, ct.sizes) - sq.first) / std::max(1.0, sq.first));
        worst = std::max(worst, std::abs(sent::fisher_score_q(st, ct.sizes) - sq.second));
    }
    o.detail << "toy corpus max rel.err=" << worst;
    o.require(worst <= 1e-12, "toy-corpus oracle");

    sent::SentimentDictionary dict;
    dict.f_threshold = 1.0;
    dict.entries["profit"] = {SClass::Positive, QClass::High, 3.0, 2.0};
    dict.entries["loss"] = {SClass::Negative, QClass::Low, 5.0, 0.1};
    dict.entries["meeting"] = {SClass::Neutral, QClass::High, 0.2, 1.5};
    const std::vector<std::int64_t> ts{100, 200, 300, 400};
    const std::vector<double> vol{10, 20, 30, 40};
    const std::vector<sent::Headline> hs{{150, "A", "profit surges, profit"},
                                         {200, "A", "loss at the meeting"},
                                         {201, "B", "annual meeting"},
                                         {400, "A", "loss loss"}};
    const auto reg = sent::build_regressors(hs, dict, ts, vol);
    const bool tallies = reg.pos == std::vector<double>{2, 0, 0} && reg.neg == std::vector<double>{1, 0, 2} &&
                         reg.high == std::vector<double>{3, 1, 0} && reg.numb == std::vector<double>{7, 2, 2} &&
                         reg.lagvol == std::vector<double>{10, 20, 30};
    o.require(tallies, "hand counts on the 3-bar fixture");

    // numb >= max(pos, neg, high) on a random corpus and dictionary.
    std::mt19937_64 rng(12);
    const std::vector<std::string> words{"up", "down", "profit", "loss", "record", "board", "cut", "rise"};
    sent::SentimentDictionary rd;
    rd.f_threshold = 0.5;
    for (std::size_t i = 0; i < words.size(); ++i) {
        rd.entries[words[i]] = {static_cast<SClass>(i % 3), static_cast<QClass>(i % 2), 0.25 * static_cast<double>(i),
                                0.3 * static_cast<double>(i)};
    }
    std::vector<std::int64_t> grid(201);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 300 * static_cast<std::int64_t>(i + 1);
    std::vector<sent::Headline> many;
    for (int k = 0; k < 3000; ++k) {
        std::string text;
        for (int w = 0; w < 1 + static_cast<int>(rng() % 6); ++w) text += words[rng() % words.size()] + " ";
        many.push_back({static_cast<std::int64_t>(rng() % 61000), "X", text});
    }
    const auto big = sent::build_regressors(many, rd, grid, std::vector<double>(grid.size(), 1.0));
    bool dominated = true;
    for (std::size_t t = 0; t < big.numb.size(); ++t) {
        dominated = dominated && big.numb[t] >= std::max({big.pos[t], big.neg[t], big.high[t]});
    }
    o.require(dominated, "numb >= max(pos, neg, high)");
}

// 10 -------------------------------------------------------------------------------------------
int cli(const std::string& args) {
    const std::string cmd = std::string(VARNEWS_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = csv::read_file(e.path());
    }
    return out;
}

void determinism(Outcome& o) {
    const auto dir = testing_support::temp_dir("acceptance_fixture");
    o.require(cli("synth --out " + dir.string() + " --sectors 2") == 0, "synth");
    const auto start = std::chrono::steady_clock::now();
    const std::string run = "run --config " + (dir / "config.toml").string();
    const int first = cli(run);
    const auto a = snapshot(dir / "out");
    const int second = cli(run);
    const auto b = snapshot(dir / "out");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t differing = 0;
    for (const auto& [path, bytes] : a) differing += !b.count(path) || b.at(path) != bytes;
    const auto manifest = nlohmann::json::parse(csv::read_file(dir / "out" / "manifest.json"));
    std::size_t panels = 0;
    for (const auto& f : manifest["files"]) panels += f.get<std::string>().find("var_tau") != std::string::npos;
    const auto header = csv::parse(csv::read_file(dir / "out" / "panels" / "Energy" / "var_tau0.01.csv"), "panel").at(0);
    o.detail << "exit codes " << first << "/" << second << ", files=" << a.size() << ", differing=" << differing
             << ", sectors x taus=" << panels << ", models in first panel=" << header.fields.size() - 2
             << ", two runs took " << seconds << " s";
    o.require(first == 0 && second == 0, "runs succeed");
    o.require(a.size() == b.size() && differing == 0 && !a.empty(), "bit-identical trees");
    o.require(manifest["config"]["models"].size() == 27 && panels == 4, "2 sectors, 27-model grid");
    o.require(seconds / 2.0 < 600.0, "runtime");
    fs::remove_all(dir);
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"distribution correctness", distributions}, {"likelihood oracle", likelihood},
        {"parameter recovery", recovery},             {"VaR coverage", coverage},
        {"backtest oracles", backtests},              {"bootstrap fidelity", bootstrap},
        {"MCS discrimination", mcs_discrimination},   {"combination", combination},
        {"sentiment", sentiment},                     {"pipeline determinism", determinism}};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %2zu %-26s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
