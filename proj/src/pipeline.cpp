#include "varnews/pipeline.hpp"

#include "varnews/backtest.hpp"
#include "varnews/config.hpp"
#include "varnews/csv.hpp"
#include "varnews/market_data.hpp"
#include "varnews/sentiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace varnews::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- config helpers

void check_keys(const json& table, const std::string& name, std::initializer_list<const char*> allowed) {
    if (!table.is_object()) throw ValidationError("config: [" + name + "] must be a table");
    for (const auto& [key, value] : table.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ValidationError("config: unknown key '" + key + "' in " + (name.empty() ? "top level" : "[" + name + "]"));
        }
    }
}

template <typename T>
T get_or(const json& table, const char* key, T fallback, const std::string& where) {
    if (!table.contains(key)) return fallback;
    try {
        return table.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: '" + std::string(key) + "' in " + where + " has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string tau_label(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", tau);
    return buf;
}

std::string slug(const std::string& name) {
    std::string out;
    for (unsigned char c : name) out += std::isalnum(c) ? static_cast<char>(c) : '_';
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// ---------------------------------------------------------------- artifacts and manifest

class Artifacts {
public:
    Artifacts(const ExperimentConfig& config, std::string command, const RunOptions& options)
        : root_(config.out_dir), command_(std::move(command)), timings_(options.timings) {
        manifest_["tool"] = "varnews";
        manifest_["tool_version"] = kToolVersion;
        manifest_["command"] = command_;
        manifest_["config_hash"] = config_hash(config);
        manifest_["config"] = config.to_json();
        manifest_["dry_run"] = options.dry_run;
    }

    void write(const std::string& rel, std::string_view content) {
        csv::write_file(root_ / rel, content);
        stage_outputs_.push_back(rel);
    }

    void warn(const std::string& message) { warnings_.push_back(message); }

    void begin(const std::string& stage) {
        stage_ = stage;
        stage_outputs_.clear();
        started_ = std::chrono::steady_clock::now();
    }

    void end() {
        ordered_json s;
        s["name"] = stage_;
        s["outputs"] = stage_outputs_;
        if (timings_) {
            s["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        }
        stages_.push_back(s);
        stage_.clear();
        stage_outputs_.clear();
    }

    void planned(const std::vector<std::string>& stages) { manifest_["planned_stages"] = stages; }

    json finish(const std::string& status, const std::string& error = {}) {
        if (!stage_.empty()) end();
        manifest_["status"] = status;
        if (!error.empty()) manifest_["error"] = error;
        manifest_["stages"] = stages_;
        manifest_["warnings"] = warnings_;
        fs::create_directories(root_);
        std::set<std::string> files{"manifest.json"};
        for (const auto& entry : fs::recursive_directory_iterator(root_)) {
            if (entry.is_regular_file()) files.insert(fs::relative(entry.path(), root_).generic_string());
        }
        manifest_["files"] = std::vector<std::string>(files.begin(), files.end());
        csv::write_file(root_ / "manifest.json", manifest_.dump(2) + "\n");
        return json::parse(manifest_.dump());
    }

private:
    fs::path root_;
    std::string command_;
    bool timings_;
    ordered_json manifest_;
    ordered_json stages_ = ordered_json::array();
    std::vector<std::string> warnings_;
    std::vector<std::string> stage_outputs_;
    std::string stage_;
    std::chrono::steady_clock::time_point started_;
};

// ---------------------------------------------------------------- stages

struct MarketData {
    std::vector<std::string> sectors;
    std::map<std::string, std::vector<std::string>> members;     // all mapped instruments with data
    std::map<std::string, std::vector<std::string>> aggregated;  // members without gaps
    std::map<std::string, market::BarSeries> instrument_label, instrument_model;
    std::map<std::string, market::BarSeries> sector_label, sector_model;
};

std::string bars_csv(const market::BarSeries& bars) {
    csv::Writer w;
    w.row({"timestamp", "log_return", "volume"});
    for (std::size_t i = 0; i < bars.bars(); ++i) {
        w.row({std::to_string(bars.timestamps[i]), i == 0 ? std::string() : csv::format_double(bars.log_returns[i - 1]),
               csv::format_double(bars.volumes[i])});
    }
    return w.str();
}

MarketData stage_ingest(const ExperimentConfig& config, Artifacts& out, bool write) {
    const auto sector_of = market::load_sector_map(config.sector_map);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(config.ticks_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    MarketData md;
    for (const auto& file : files) {
        const std::string id = file.stem().string();
        const auto it = sector_of.find(id);
        if (it == sector_of.end()) {
            out.warn("instrument " + id + " has no sector mapping; skipped");
            continue;
        }
        const auto ticks = market::load_ticks(file);
        md.instrument_label[id] = market::resample(ticks, config.label_interval);
        md.instrument_model[id] = market::resample(ticks, config.model_interval);
        md.members[it->second].push_back(id);
    }
    for (const auto& [id, sector] : sector_of) {
        if (!md.instrument_model.count(id)) out.warn("instrument " + id + " is mapped to " + sector + " but has no tick file");
    }
    for (const auto& [sector, ids] : md.members) {
        std::vector<market::BarSeries> model, label;
        for (const auto& id : ids) {
            model.push_back(md.instrument_model.at(id));
            label.push_back(md.instrument_label.at(id));
        }
        const auto pm = market::partition_by_grid(model);
        const auto pl = market::partition_by_grid(label);
        std::vector<market::BarSeries> keep_model, keep_label;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const bool ok = std::count(pm.complete.begin(), pm.complete.end(), i) &&
                            std::count(pl.complete.begin(), pl.complete.end(), i);
            if (!ok) {
                out.warn("instrument " + ids[i] + " has gaps on the common grid; excluded from " + sector);
                continue;
            }
            keep_model.push_back(model[i]);
            keep_label.push_back(label[i]);
            md.aggregated[sector].push_back(ids[i]);
        }
        if (keep_model.empty()) {
            out.warn("sector " + sector + " has no complete member series; skipped");
            continue;
        }
        md.sector_model[sector] = market::aggregate_sector(keep_model);
        md.sector_label[sector] = market::aggregate_sector(keep_label);
        md.sectors.push_back(sector);
    }
    if (md.sectors.empty()) throw ValidationError("ingest: no sector could be built from " + config.ticks_dir.string());

    if (write) {
        for (const auto& [id, bars] : md.instrument_label) {
            out.write("bars/instruments/" + slug(id) + "_" + std::to_string(config.label_interval) + "s.csv", bars_csv(bars));
            out.write("bars/instruments/" + slug(id) + "_" + std::to_string(config.model_interval) + "s.csv",
                      bars_csv(md.instrument_model.at(id)));
        }
        csv::Writer stats;
        stats.row({"sector", "n", "min", "max", "mean", "std_dev", "skewness", "kurtosis", "quantile_1pct", "jarque_bera"});
        for (const auto& sector : md.sectors) {
            out.write("bars/sectors/" + slug(sector) + "_" + std::to_string(config.label_interval) + "s.csv",
                      bars_csv(md.sector_label.at(sector)));
            out.write("bars/sectors/" + slug(sector) + "_" + std::to_string(config.model_interval) + "s.csv",
                      bars_csv(md.sector_model.at(sector)));
            const auto s = market::summary_stats(md.sector_model.at(sector).log_returns);
            const auto f = csv::format_double;
            stats.row({sector, std::to_string(s.n), f(s.min), f(s.max), f(s.mean), f(s.std_dev), f(s.skewness),
                       f(s.kurtosis), f(s.quantile_1pct), f(s.jarque_bera)});
        }
        out.write("tables/summary_stats.csv", stats.str());
    }
    return md;
}

std::size_t insample_size(const ExperimentConfig& config, const market::BarSeries& bars) {
    return static_cast<std::size_t>(
        std::floor(static_cast<double>(bars.log_returns.size()) * config.roll.insample_fraction));
}

struct DictStage {
    sent::SentimentDictionary dict;
    std::vector<sent::Headline> headlines;
    std::int64_t split_time = 0;
};

DictStage stage_dictionary(const ExperimentConfig& config, const MarketData& md, Artifacts& out, bool write) {
    DictStage ds;
    const auto raw = sent::load_headlines(config.headlines);
    ds.headlines = sent::deduplicate(raw);
    if (ds.headlines.size() < raw.size()) {
        out.warn(std::to_string(raw.size() - ds.headlines.size()) + " duplicate headlines dropped");
    }
    bool first = true;
    for (const auto& sector : md.sectors) {
        const auto& bars = md.sector_model.at(sector);
        const std::size_t w = insample_size(config, bars);
        if (w == 0) throw ValidationError("build-dict: sector " + sector + " has no in-sample returns");
        const std::int64_t t = bars.return_timestamps()[w - 1];
        ds.split_time = first ? t : std::min(ds.split_time, t);
        first = false;
    }

    // Labeling series per headline id: the instrument's bars, else the sector's.
    std::map<std::string, std::vector<sent::Headline>> by_id;
    for (const auto& h : ds.headlines) {
        if (h.timestamp <= ds.split_time) by_id[h.id].push_back(h);
    }
    std::vector<sent::LabeledHeadline> labeled;
    std::size_t unmatched = 0;
    csv::Writer thresholds;
    thresholds.row({"series", "n_returns", "r_neg", "r_pos", "r_high"});
    for (const auto& [id, hs] : by_id) {
        const market::BarSeries* bars = nullptr;
        if (auto it = md.instrument_label.find(id); it != md.instrument_label.end()) bars = &it->second;
        else if (auto is = md.sector_label.find(id); is != md.sector_label.end()) bars = &is->second;
        if (bars == nullptr) {
            out.warn("headline id " + id + " matches no instrument or sector; " + std::to_string(hs.size()) +
                     " in-sample headlines ignored");
            continue;
        }
        std::vector<double> insample;
        const auto ts = bars->return_timestamps();
        for (std::size_t i = 0; i < ts.size() && ts[i] <= ds.split_time; ++i) insample.push_back(bars->log_returns[i]);
        sent::Thresholds th;
        try {
            th = sent::compute_thresholds(insample);
        } catch (const ValidationError& e) {
            out.warn("thresholds for " + id + ": " + e.what() + "; its headlines are not labeled");
            continue;
        }
        const auto f = csv::format_double;
        thresholds.row({id, std::to_string(insample.size()), f(th.r_neg), f(th.r_pos), f(th.r_high)});
        auto res = sent::label_headlines(hs, *bars, th);
        unmatched += res.unmatched;
        labeled.insert(labeled.end(), res.labeled.begin(), res.labeled.end());
    }
    if (unmatched > 0) out.warn(std::to_string(unmatched) + " in-sample headlines fall outside the labeling grid");
    if (labeled.empty()) throw ValidationError("build-dict: no labeled headlines in the in-sample period");
    std::stable_sort(labeled.begin(), labeled.end(), [](const auto& a, const auto& b) {
        return a.headline.timestamp < b.headline.timestamp;
    });
    ds.dict = sent::build_dictionary(labeled, config.f_threshold);

    if (write) {
        out.write("sentiment/dictionary.json", sent::dictionary_json(ds.dict));
        out.write("sentiment/thresholds.csv", thresholds.str());
        csv::Writer labels;
        labels.row({"timestamp", "id", "s_class", "q_class", "matched_return"});
        for (const auto& lh : labeled) {
            labels.row({std::to_string(lh.headline.timestamp), lh.headline.id, std::string(sent::to_string(lh.s_class)),
                        std::string(sent::to_string(lh.q_class)), csv::format_double(lh.matched_return)});
        }
        out.write("sentiment/labels.csv", labels.str());
    }
    return ds;
}

std::map<std::string, sent::RegressorSeries> stage_regressors(const MarketData& md, const DictStage& ds,
                                                              Artifacts& out, bool write) {
    std::map<std::string, sent::RegressorSeries> result;
    for (const auto& sector : md.sectors) {
        const auto& members = md.members.at(sector);
        std::vector<sent::Headline> hs;
        for (const auto& h : ds.headlines) {
            if (h.id == sector || std::count(members.begin(), members.end(), h.id)) hs.push_back(h);
        }
        const auto& bars = md.sector_model.at(sector);
        auto reg = sent::build_regressors(hs, ds.dict, bars.timestamps, bars.volumes);
        if (reg.unplaced > 0) {
            out.warn(sector + ": " + std::to_string(reg.unplaced) + " headlines fall outside the bar grid");
        }
        if (write) out.write("regressors/" + slug(sector) + ".csv", sent::regressors_csv(reg));
        result.emplace(sector, std::move(reg));
    }
    return result;
}

Matrix regressors_for(const vol::ModelSpec& spec, const sent::RegressorSeries& reg) {
    switch (spec.regressors) {
        case vol::RegressorKind::None: return Matrix(0, 0);
        case vol::RegressorKind::InfoVolume: return reg.info_volume();
        case vol::RegressorKind::Sentiment: return reg.sentiment();
    }
    return Matrix(0, 0);
}

ordered_json params_json(const vol::ParamVector& p, const vol::ModelSpec& spec) {
    ordered_json j{{"mu", p.mu}, {"phi", p.phi}, {"omega", p.omega}, {"delta", p.delta}, {"alpha", p.alpha},
                   {"beta", p.beta}};
    if (spec.dynamics != vol::Dynamics::Garch) j["gamma"] = p.gamma;
    if (spec.law != dist::LawKind::Gaussian) j["shape"] = p.shape;
    return j;
}

struct SectorOutcome {
    std::map<double, mcs::MCSResult> mcs;
    std::map<double, std::vector<std::string>> combo_row;
};

std::vector<std::string> stage_run_sector(const ExperimentConfig& config, const std::string& sector,
                                          const market::BarSeries& bars, const sent::RegressorSeries& reg,
                                          Artifacts& out, SectorOutcome& outcome) {
    std::vector<Matrix> regs;
    for (const auto& spec : config.models) regs.push_back(regressors_for(spec, reg));
    est::FitConfig fit = config.fit;
    fit.seed = derive_seed(config.seed, "fit/" + sector);
    fc::RollConfig roll = config.roll;
    roll.threads = config.threads;
    const auto result =
        fc::rolling_run(config.models, bars.log_returns, bars.return_timestamps(), regs, roll, fit);
    for (const auto& f : result.failures) {
        out.warn(sector + ": model " + f.model_id + " excluded after a failed refit at step " + std::to_string(f.step) +
                 ": " + f.message);
    }
    if (result.unconverged_fits > 0) {
        out.warn(sector + ": " + std::to_string(result.unconverged_fits) + " refits stopped before convergence");
    }
    const std::string dir = slug(sector);
    ordered_json meta;
    meta["sector"] = sector;
    std::vector<std::string> ids;
    for (const auto& s : config.models) ids.push_back(s.id());
    meta["models"] = ids;
    meta["excluded"] = result.excluded;
    meta["insample_size"] = result.insample_size;
    meta["refits_per_model"] = result.refits_per_model;
    meta["refit_every"] = config.roll.refit_every;
    meta["fit_seed"] = fit.seed;
    meta["taus"] = config.roll.taus;
    out.write("panels/" + dir + "/meta.json", meta.dump(2) + "\n");

    std::vector<std::string> lines;
    for (const auto& panel : result.panels) {
        const std::string tl = tau_label(panel.tau);
        out.write("panels/" + dir + "/var_tau" + tl + ".csv", fc::panel_var_csv(panel));
        out.write("panels/" + dir + "/sigma2_tau" + tl + ".csv", fc::panel_sigma2_csv(panel));
        if (panel.model_ids.empty()) {
            out.warn(sector + ": every model failed at tau " + tl);
            continue;
        }

        bt::DqOptions dq;
        dq.lags = config.dq_lags;
        std::vector<bt::BacktestReport> reports;
        for (std::size_t j = 0; j < panel.model_ids.size(); ++j) {
            reports.push_back(bt::backtest(panel.model_ids[j], panel.realized, panel.var.column(j), panel.tau, dq));
        }
        out.write("backtest/" + dir + "_tau" + tl + ".csv", bt::reports_csv(reports));
        out.write("backtest/" + dir + "_tau" + tl + ".json", bt::reports_json(reports));

        const auto losses = mcs::loss_matrix(panel);
        mcs::MCSResult m;
        mcs::MCSConfig mc = config.mcs;
        mc.seed = derive_seed(config.seed, "mcs/" + sector + "/" + tl);
        if (panel.model_ids.size() >= 2) {
            m = mcs::mcs_run(losses, mc);
        } else {
            m.surviving_ids = panel.model_ids;
            m.pvalues[panel.model_ids[0]] = 1.0;
        }
        out.write("mcs/" + dir + "_tau" + tl + ".json", mcs::result_json(m, losses, mc));

        std::vector<std::size_t> cols;
        for (const auto& id : m.surviving_ids) {
            cols.push_back(static_cast<std::size_t>(
                std::find(panel.model_ids.begin(), panel.model_ids.end(), id) - panel.model_ids.begin()));
        }
        const auto ssm = panel.select(cols);
        const auto var_avg = comb::static_average(ssm.var);
        comb::KappaFit kfit;
        if (config.optimize_kappa && cols.size() >= 2) {
            comb::KappaOptions ko;
            ko.max_iterations = config.kappa_iterations;
            ko.threads = config.threads;
            kfit = comb::optimize_kappa(ssm.var, ssm.realized, ssm.sigma2_hat, panel.tau, config.kernel_sign, ko);
            if (!kfit.converged) out.warn(sector + ": kappa search at tau " + tl + " stopped before convergence");
        } else {
            kfit.kappa.assign(cols.size(), 0.9);
            kfit.converged = true;
        }
        const auto weights = comb::dynamic_weights(ssm.var, ssm.realized, ssm.sigma2_hat, kfit.kappa, panel.tau,
                                                   config.kernel_sign);
        const auto var_dyn = comb::combine(ssm.var, weights.weights);

        csv::Writer cw;
        cw.row({"timestamp", "realized", "var_avg", "var_dyn"});
        for (std::size_t t = 0; t < var_dyn.size(); ++t) {
            cw.row({std::to_string(ssm.timestamps[t]), csv::format_double(ssm.realized[t]), csv::format_double(var_avg[t]),
                    csv::format_double(var_dyn[t])});
        }
        out.write("combine/" + dir + "_tau" + tl + ".csv", cw.str());

        const auto dyn_hits = bt::hits(ssm.realized, var_dyn, panel.tau);
        const auto avg_hits = bt::hits(ssm.realized, var_avg, panel.tau);
        const auto dyn_ad = bt::ad_stats(ssm.realized, var_dyn, dyn_hits);
        const auto avg_ad = bt::ad_stats(ssm.realized, var_avg, avg_hits);
        const double dyn_loss = comb::average_loss(ssm.realized, var_dyn, panel.tau);
        const double avg_loss = comb::average_loss(ssm.realized, var_avg, panel.tau);
        ordered_json cj;
        cj["tau"] = panel.tau;
        cj["kernel_sign"] = config.kernel_sign;
        cj["ssm"] = m.surviving_ids;
        cj["kappa"] = kfit.kappa;
        cj["kappa_converged"] = kfit.converged;
        cj["loss"] = {{"var_dyn", dyn_loss}, {"var_avg", avg_loss}};
        cj["ad"] = {{"var_dyn", {{"mean", dyn_ad.mean}, {"max", dyn_ad.max}, {"violations", dyn_hits.count()}}},
                    {"var_avg", {{"mean", avg_ad.mean}, {"max", avg_ad.max}, {"violations", avg_hits.count()}}}};
        out.write("combine/" + dir + "_tau" + tl + ".json", cj.dump(2) + "\n");

        const auto f = csv::format_double;
        outcome.combo_row[panel.tau] = {sector,          std::to_string(cols.size()),
                                        f(dyn_ad.mean),  f(dyn_ad.max),
                                        f(avg_ad.mean),  f(avg_ad.max),
                                        std::to_string(dyn_hits.count()), std::to_string(avg_hits.count()),
                                        f(dyn_loss),     f(avg_loss)};
        outcome.mcs[panel.tau] = m;
    }
    return lines;
}

template <typename F>
json run_guarded(const ExperimentConfig& config, const RunOptions& options, const std::string& command,
                 const std::vector<std::string>& stages, F&& body) {
    validate(config);
    Artifacts out(config, command, options);
    out.planned(stages);
    if (options.dry_run) return out.finish("dry-run");
    try {
        body(out);
    } catch (const std::exception& e) {
        out.finish("failed", e.what());
        throw;
    }
    return out.finish("ok");
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<vol::ModelSpec> full_model_grid() {
    std::vector<vol::ModelSpec> grid;
    for (auto d : {vol::Dynamics::Garch, vol::Dynamics::Egarch, vol::Dynamics::Gjr})
        for (auto l : {dist::LawKind::Gaussian, dist::LawKind::StudentT, dist::LawKind::GED})
            for (auto r : {vol::RegressorKind::None, vol::RegressorKind::InfoVolume, vol::RegressorKind::Sentiment})
                grid.push_back({d, l, r});
    return grid;
}

json ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["data"] = {{"ticks_dir", ticks_dir.generic_string()},
                 {"sector_map", sector_map.generic_string()},
                 {"headlines", headlines.generic_string()}};
    j["output"] = {{"dir", out_dir.generic_string()}};
    j["bars"] = {{"label_interval", label_interval}, {"model_interval", model_interval}};
    j["roll"] = {{"insample_fraction", roll.insample_fraction}, {"refit_every", roll.refit_every}, {"taus", roll.taus}};
    j["fit"] = {{"max_iterations", fit.max_iterations},
                {"tolerance", fit.tolerance},
                {"starts", fit.starts},
                {"min_obs", fit.min_obs}};
    std::vector<std::string> ids;
    for (const auto& m : models) ids.push_back(m.id());
    j["models"] = ids;
    j["mcs"] = {{"alpha", mcs.alpha}, {"B", mcs.B}, {"max_block_lag", mcs.max_block_lag}};
    j["combine"] = {{"kernel_sign", kernel_sign}, {"optimize_kappa", optimize_kappa}, {"kappa_iterations", kappa_iterations}};
    j["sentiment"] = {{"f_threshold", f_threshold}};
    j["backtest"] = {{"dq_lags", dq_lags}};
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.to_json().dump())));
    return buf;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
    check_keys(j, "", {"seed", "threads", "data", "output", "bars", "roll", "fit", "models", "mcs", "combine",
                       "sentiment", "backtest"});
    ExperimentConfig c;
    const json empty = json::object();
    auto table = [&](const char* name) -> const json& { return j.contains(name) ? j.at(name) : empty; };
    const auto seed = get_or<std::int64_t>(j, "seed", 1, "top level");
    if (seed < 0) throw ValidationError("config: seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    const auto threads = get_or<std::int64_t>(j, "threads", 0, "top level");
    if (threads < 0) throw ValidationError("config: threads must be non-negative");
    c.threads = static_cast<unsigned>(threads);

    const auto& data = table("data");
    check_keys(data, "data", {"ticks_dir", "sector_map", "headlines"});
    c.ticks_dir = resolve(base_dir, get_or<std::string>(data, "ticks_dir", "", "[data]"));
    c.sector_map = resolve(base_dir, get_or<std::string>(data, "sector_map", "", "[data]"));
    c.headlines = resolve(base_dir, get_or<std::string>(data, "headlines", "", "[data]"));

    const auto& output = table("output");
    check_keys(output, "output", {"dir"});
    c.out_dir = resolve(base_dir, get_or<std::string>(output, "dir", "out", "[output]"));

    const auto& bars = table("bars");
    check_keys(bars, "bars", {"label_interval", "model_interval"});
    c.label_interval = get_or<std::int64_t>(bars, "label_interval", c.label_interval, "[bars]");
    c.model_interval = get_or<std::int64_t>(bars, "model_interval", c.model_interval, "[bars]");

    const auto& roll = table("roll");
    check_keys(roll, "roll", {"insample_fraction", "refit_every", "taus"});
    c.roll.insample_fraction = get_or<double>(roll, "insample_fraction", c.roll.insample_fraction, "[roll]");
    const auto refit = get_or<std::int64_t>(roll, "refit_every", 100, "[roll]");
    if (refit <= 0) throw ValidationError("config: refit_every must be positive");
    c.roll.refit_every = static_cast<std::size_t>(refit);
    c.roll.taus = get_or<std::vector<double>>(roll, "taus", c.roll.taus, "[roll]");

    const auto& fit = table("fit");
    check_keys(fit, "fit", {"max_iterations", "tolerance", "starts", "min_obs"});
    c.fit.max_iterations = get_or<int>(fit, "max_iterations", c.fit.max_iterations, "[fit]");
    c.fit.tolerance = get_or<double>(fit, "tolerance", c.fit.tolerance, "[fit]");
    c.fit.starts = get_or<int>(fit, "starts", c.fit.starts, "[fit]");
    const auto min_obs = get_or<std::int64_t>(fit, "min_obs", 100, "[fit]");
    if (min_obs < 1) throw ValidationError("config: min_obs must be positive");
    c.fit.min_obs = static_cast<std::size_t>(min_obs);

    const auto& models = table("models");
    check_keys(models, "models", {"dynamics", "laws", "regressors"});
    const auto dyn = get_or<std::vector<std::string>>(models, "dynamics", {"GARCH", "EGARCH", "GJR"}, "[models]");
    const auto laws = get_or<std::vector<std::string>>(models, "laws", {"N", "T", "GED"}, "[models]");
    const auto regs = get_or<std::vector<std::string>>(models, "regressors", {"N", "IV", "SE"}, "[models]");
    for (const auto& d : dyn)
        for (const auto& l : laws)
            for (const auto& r : regs)
                c.models.push_back({vol::dynamics_from_string(d), dist::law_kind_from_string(l),
                                    vol::regressor_kind_from_string(r)});

    const auto& m = table("mcs");
    check_keys(m, "mcs", {"alpha", "B", "max_block_lag"});
    c.mcs.alpha = get_or<double>(m, "alpha", c.mcs.alpha, "[mcs]");
    const auto b = get_or<std::int64_t>(m, "B", 1000, "[mcs]");
    const auto lag = get_or<std::int64_t>(m, "max_block_lag", 10, "[mcs]");
    if (b < 1 || lag < 1) throw ValidationError("config: [mcs] B and max_block_lag must be positive");
    c.mcs.B = static_cast<std::size_t>(b);
    c.mcs.max_block_lag = static_cast<std::size_t>(lag);

    const auto& cb = table("combine");
    check_keys(cb, "combine", {"kernel_sign", "optimize_kappa", "kappa_iterations"});
    c.kernel_sign = get_or<double>(cb, "kernel_sign", c.kernel_sign, "[combine]");
    c.optimize_kappa = get_or<bool>(cb, "optimize_kappa", c.optimize_kappa, "[combine]");
    c.kappa_iterations = get_or<int>(cb, "kappa_iterations", c.kappa_iterations, "[combine]");

    const auto& st = table("sentiment");
    check_keys(st, "sentiment", {"f_threshold"});
    c.f_threshold = get_or<double>(st, "f_threshold", c.f_threshold, "[sentiment]");

    const auto& bt = table("backtest");
    check_keys(bt, "backtest", {"dq_lags"});
    const auto lags = get_or<std::int64_t>(bt, "dq_lags", 4, "[backtest]");
    if (lags < 0) throw ValidationError("config: dq_lags must be non-negative");
    c.dq_lags = static_cast<std::size_t>(lags);
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    const auto j = config::parse_toml(csv::read_file(path), path.string());
    return config_from_json(j, path.parent_path());
}

void validate(const ExperimentConfig& c) {
    auto require_path = [](const fs::path& p, const char* what) {
        if (p.empty()) throw ValidationError(std::string("config: ") + what + " is not set");
        if (!fs::exists(p)) throw ValidationError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
    };
    require_path(c.ticks_dir, "data.ticks_dir");
    require_path(c.sector_map, "data.sector_map");
    require_path(c.headlines, "data.headlines");
    if (c.models.empty()) throw ValidationError("config: the model grid is empty");
    if (c.label_interval <= 0 || c.model_interval <= 0) throw ValidationError("config: bar intervals must be positive");
    if (!(c.roll.insample_fraction > 0.0 && c.roll.insample_fraction < 1.0)) {
        throw ValidationError("config: insample_fraction must lie in (0,1)");
    }
    if (c.roll.taus.empty()) throw ValidationError("config: no taus");
    for (double t : c.roll.taus) {
        if (!(t > 0.0 && t < 0.5)) throw ValidationError("config: taus must lie in (0, 0.5)");
    }
    if (c.fit.starts < 1 || !(c.fit.tolerance > 0.0) || c.fit.max_iterations < 1) {
        throw ValidationError("config: invalid [fit] settings");
    }
    if (!(c.mcs.alpha > 0.0 && c.mcs.alpha < 1.0) || c.mcs.B < 200) {
        throw ValidationError("config: [mcs] needs alpha in (0,1) and B >= 200");
    }
    if (c.kernel_sign != 1.0 && c.kernel_sign != -1.0) throw ValidationError("config: kernel_sign must be +1 or -1");
    if (c.kappa_iterations < 1) throw ValidationError("config: kappa_iterations must be positive");
}

// ---------------------------------------------------------------- verbs

json cmd_ingest(const ExperimentConfig& config, const RunOptions& options) {
    return run_guarded(config, options, "ingest", {"ingest"}, [&](Artifacts& out) {
        out.begin("ingest");
        (void)stage_ingest(config, out, true);
        out.end();
    });
}

json cmd_build_dict(const ExperimentConfig& config, const RunOptions& options) {
    return run_guarded(config, options, "build-dict", {"ingest", "build-dict"}, [&](Artifacts& out) {
        out.begin("ingest");
        const auto md = stage_ingest(config, out, false);
        out.end();
        out.begin("build-dict");
        (void)stage_dictionary(config, md, out, true);
        out.end();
    });
}

json cmd_regressors(const ExperimentConfig& config, const RunOptions& options) {
    return run_guarded(config, options, "regressors", {"ingest", "build-dict", "regressors"}, [&](Artifacts& out) {
        out.begin("ingest");
        const auto md = stage_ingest(config, out, false);
        out.end();
        out.begin("build-dict");
        const auto ds = stage_dictionary(config, md, out, false);
        out.end();
        out.begin("regressors");
        (void)stage_regressors(md, ds, out, true);
        out.end();
    });
}

json cmd_fit(const ExperimentConfig& config, const RunOptions& options) {
    return run_guarded(config, options, "fit", {"ingest", "build-dict", "regressors", "fit"}, [&](Artifacts& out) {
        out.begin("ingest");
        const auto md = stage_ingest(config, out, false);
        out.end();
        out.begin("build-dict");
        const auto ds = stage_dictionary(config, md, out, false);
        out.end();
        out.begin("regressors");
        const auto regs = stage_regressors(md, ds, out, false);
        out.end();
        out.begin("fit");
        for (const auto& sector : md.sectors) {
            const auto& bars = md.sector_model.at(sector);
            const std::size_t w = insample_size(config, bars);
            const std::span<const double> window(bars.log_returns.data(), w);
            std::vector<ordered_json> rows(config.models.size());
            parallel_for(config.models.size(), config.threads, [&](std::size_t j) {
                const auto& spec = config.models[j];
                const Matrix x = regressors_for(spec, regs.at(sector));
                const Matrix xw = x.cols() > 0 ? x.slice_rows(0, w) : x;
                est::FitConfig fc = config.fit;
                fc.seed = derive_seed(config.seed, "fit/" + sector + "/" + spec.id());
                ordered_json r;
                r["model"] = spec.id();
                try {
                    const auto fm = est::fit(spec, window, xw, fc);
                    r["converged"] = fm.converged;
                    r["loglik"] = fm.loglik;
                    r["aic"] = fm.aic;
                    r["bic"] = fm.bic;
                    r["n_obs"] = fm.n_obs;
                    r["params"] = params_json(fm.params, spec);
                    r["regressor_scales"] = fm.regressor_scales;
                } catch (const std::exception& e) {
                    r["error"] = e.what();
                }
                rows[j] = std::move(r);
            });
            ordered_json doc;
            doc["sector"] = sector;
            doc["insample_size"] = w;
            doc["fits"] = rows;
            for (const auto& r : rows) {
                if (r.contains("error")) out.warn(sector + ": fit of " + r["model"].get<std::string>() + " failed");
            }
            out.write("fits/" + slug(sector) + ".json", doc.dump(2) + "\n");
        }
        out.end();
    });
}

json cmd_run(const ExperimentConfig& config, const RunOptions& options) {
    const std::vector<std::string> stages{"ingest", "build-dict", "regressors", "forecast", "tables"};
    return run_guarded(config, options, "run", stages, [&](Artifacts& out) {
        out.begin("ingest");
        const auto md = stage_ingest(config, out, true);
        out.end();
        out.begin("build-dict");
        const auto ds = stage_dictionary(config, md, out, true);
        out.end();
        out.begin("regressors");
        const auto regs = stage_regressors(md, ds, out, true);
        out.end();
        out.begin("forecast");
        std::map<std::string, SectorOutcome> outcomes;
        for (const auto& sector : md.sectors) {
            (void)stage_run_sector(config, sector, md.sector_model.at(sector), regs.at(sector), out, outcomes[sector]);
        }
        out.end();
        out.begin("tables");
        for (double tau : config.roll.taus) {
            const std::string tl = tau_label(tau);
            std::vector<std::string> sectors;
            std::vector<mcs::MCSResult> results;
            csv::Writer combo;
            combo.row({"sector", "ssm_size", "dyn_ad_mean", "dyn_ad_max", "avg_ad_mean", "avg_ad_max", "dyn_violations",
                       "avg_violations", "dyn_loss", "avg_loss"});
            for (const auto& sector : md.sectors) {
                const auto& oc = outcomes.at(sector);
                if (!oc.mcs.count(tau)) continue;
                sectors.push_back(sector);
                results.push_back(oc.mcs.at(tau));
                combo.row(oc.combo_row.at(tau));
            }
            out.write("tables/mcs_composition_tau" + tl + ".csv", mcs::composition_csv(sectors, results));
            out.write("tables/combination_tau" + tl + ".csv", combo.str());
        }
        out.end();
    });
}

json cmd_report(const fs::path& out_dir) {
    const fs::path manifest_path = out_dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw ValidationError("report: " + manifest_path.string() + " not found");
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(csv::read_file(manifest_path));
    } catch (const json::exception& e) {
        throw ValidationError("report: unreadable manifest: " + std::string(e.what()));
    }
    auto table_md = [&](const fs::path& file) {
        const auto recs = csv::parse(csv::read_file(file), file.string());
        std::ostringstream md;
        for (std::size_t r = 0; r < recs.size(); ++r) {
            md << "|";
            for (const auto& f : recs[r].fields) md << " " << f << " |";
            md << "\n";
            if (r == 0) {
                md << "|";
                for (std::size_t c = 0; c < recs[r].fields.size(); ++c) md << " --- |";
                md << "\n";
            }
        }
        return md.str();
    };
    std::ostringstream md;
    md << "# Run report\n\n";
    md << "Config hash `" << manifest.value("config_hash", "") << "`, tool version " << manifest.value("tool_version", "")
       << ", status " << manifest.value("status", "") << ".\n\n";
    std::vector<fs::path> tables;
    if (fs::exists(out_dir / "tables")) {
        for (const auto& e : fs::directory_iterator(out_dir / "tables")) {
            if (e.path().extension() == ".csv") tables.push_back(e.path());
        }
    }
    if (tables.empty()) throw ValidationError("report: no tables under " + (out_dir / "tables").string());
    std::sort(tables.begin(), tables.end());
    for (const auto& t : tables) md << "## " << t.stem().string() << "\n\n" << table_md(t) << "\n";
    const auto& warnings = manifest["warnings"];
    md << "## Warnings\n\n";
    if (warnings.empty()) md << "None.\n";
    for (const auto& w : warnings) md << "- " << w.get<std::string>() << "\n";
    csv::write_file(out_dir / "report.md", md.str());

    std::set<std::string> files;
    for (const auto& f : manifest["files"]) files.insert(f.get<std::string>());
    files.insert("report.md");
    manifest["files"] = std::vector<std::string>(files.begin(), files.end());
    csv::write_file(manifest_path, manifest.dump(2) + "\n");
    return json::parse(manifest.dump());
}

// ---------------------------------------------------------------- synthetic fixture

void cmd_synth(const fs::path& dir, const SynthConfig& sc) {
    static const std::vector<std::string> kSectorNames{
        "Energy", "Finance",   "Health",    "Retail",    "Transport",    "Utilities", "Materials",
        "Media",  "Telecom",   "Software",  "Banks",     "Insurance",    "Autos",     "Chemicals",
        "Construction", "Food", "Leisure", "RealEstate", "Industrials"};
    static const std::vector<std::string> kGood{"beats", "surges", "upgrade", "record", "profit", "rally", "approval"};
    static const std::vector<std::string> kBad{"misses", "plunges", "downgrade", "loss", "probe", "recall", "default"};
    static const std::vector<std::string> kFiller{"company", "shares", "update", "market", "report", "quarter",
                                                  "statement", "guidance", "board", "meeting", "trading", "investors"};
    if (sc.sectors == 0 || sc.sectors > kSectorNames.size()) {
        throw ValidationError("synth: sectors must lie in 1.." + std::to_string(kSectorNames.size()));
    }
    if (sc.instruments_per_sector == 0 || sc.days == 0) throw ValidationError("synth: empty market");
    constexpr std::int64_t kStart = 1704067200 + 9 * 3600;  // 2024-01-01 09:00 UTC
    constexpr std::size_t kSessionMinutes = 510;

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    csv::Writer sectors_csv, headlines_csv;
    sectors_csv.row({"instrument_id", "sector"});
    headlines_csv.row({"timestamp", "id", "text"});
    const std::size_t minutes = sc.days * kSessionMinutes;
    auto pick = [&](const std::vector<std::string>& words) { return words[rng() % words.size()]; };

    for (std::size_t s = 0; s < sc.sectors; ++s) {
        // Sector factor with GARCH(1,1) variance and Student-t shocks, per minute.
        const auto shocks = dist::sample(dist::ErrorLaw::student_t(6.0), derive_seed(sc.seed, "synth/" + kSectorNames[s]),
                                         minutes);
        std::vector<double> factor(minutes);
        const double alpha = 0.08, beta = 0.90, target = 4e-4 * 4e-4;
        const double omega = target * (1.0 - alpha - beta);
        double sigma2 = target, eps = 0.0;
        for (std::size_t m = 0; m < minutes; ++m) {
            sigma2 = omega + alpha * eps * eps + beta * sigma2;
            eps = std::sqrt(sigma2) * shocks[m];
            factor[m] = eps;
        }
        for (std::size_t i = 0; i < sc.instruments_per_sector; ++i) {
            const std::string id = kSectorNames[s].substr(0, 3) + std::to_string(i + 1);
            sectors_csv.row({id, kSectorNames[s]});
            csv::Writer ticks;
            ticks.row({"timestamp", "price", "volume"});
            double log_price = std::log(50.0 + 25.0 * static_cast<double>(i + s));
            for (std::size_t m = 0; m < minutes; ++m) {
                const std::size_t day = m / kSessionMinutes, minute = m % kSessionMinutes;
                const std::int64_t ts = kStart + static_cast<std::int64_t>(day) * 86400 + static_cast<std::int64_t>(minute) * 60;
                const double r = factor[m] + 2e-4 * normal(rng);
                log_price += r;
                const double z = r / 4.5e-4;
                const double volume = std::round(1000.0 * std::exp(0.5 * normal(rng)) * (1.0 + std::abs(z)));
                char price[32];
                std::snprintf(price, sizeof price, "%.6f", std::exp(log_price));
                ticks.row({std::to_string(ts), price, csv::format_double(volume)});

                const double rate = std::min(1.0, sc.headline_rate * (std::abs(z) > 2.5 ? 20.0 : 1.0));
                if (unif(rng) < rate) {
                    std::string text = id + " " + pick(kFiller);
                    if (z > 2.5) text += " " + pick(kGood) + " " + pick(kGood);
                    else if (z < -2.5) text += " " + pick(kBad) + " " + pick(kBad);
                    else if (unif(rng) < 0.3) text += " " + pick(unif(rng) < 0.5 ? kGood : kBad);
                    text += " " + pick(kFiller) + " " + pick(kFiller);
                    headlines_csv.row({std::to_string(ts - 30), id, text});
                }
            }
            csv::write_file(dir / "ticks" / (id + ".csv"), ticks.str());
        }
    }
    csv::write_file(dir / "sectors.csv", sectors_csv.str());
    csv::write_file(dir / "headlines.csv", headlines_csv.str());
    const std::string toml = R"(# Synthetic fixture experiment
seed = 2024

[data]
ticks_dir = "ticks"
sector_map = "sectors.csv"
headlines = "headlines.csv"

[output]
dir = "out"

[bars]
label_interval = 120
model_interval = 300

[roll]
insample_fraction = 0.5
refit_every = 310
taus = [0.01, 0.001]

[fit]
max_iterations = 5000
tolerance = 1e-8
starts = 2

[mcs]
alpha = 0.25
B = 500
max_block_lag = 10

[combine]
kernel_sign = -1
kappa_iterations = 3000
)";
    csv::write_file(dir / "config.toml", toml);
}

}  // namespace varnews::pipeline
