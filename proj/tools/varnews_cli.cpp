#include "varnews/common.hpp"
#include "varnews/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using varnews::pipeline::ExperimentConfig;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<double> taus;
    std::optional<int> kernel_sign;
    std::optional<double> f_threshold;
    std::optional<unsigned> threads;
    varnews::pipeline::RunOptions run;
};

ExperimentConfig resolve_config(const Overrides& o) {
    auto c = varnews::pipeline::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.out_dir = *o.out;
    if (!o.taus.empty()) c.roll.taus = o.taus;
    if (o.kernel_sign) c.kernel_sign = *o.kernel_sign;
    if (o.f_threshold) c.f_threshold = *o.f_threshold;
    if (o.threads) c.threads = *o.threads;
    return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Root seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--tau", o.taus, "VaR levels, e.g. --tau 0.01,0.001")->delimiter(',');
    cmd->add_option("--kernel-sign", o.kernel_sign, "Combination kernel sign")->check(CLI::IsMember({-1, 1}));
    cmd->add_option("--f-threshold", o.f_threshold, "Fisher-score threshold for the dictionary");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware)");
    cmd->add_flag("--dry-run", o.run.dry_run, "Validate and write the manifest only");
    cmd->add_flag("--timings", o.run.timings, "Record per-stage wall time in the manifest");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intraday VaR forecasting with news regressors"};
    app.set_version_flag("--version", std::string(varnews::pipeline::kToolVersion));
    app.require_subcommand(1);

    Overrides o;
    using Verb = nlohmann::json (*)(const ExperimentConfig&, const varnews::pipeline::RunOptions&);
    const std::vector<std::tuple<const char*, const char*, Verb>> verbs{
        {"ingest", "Resample ticks into instrument and sector bars", varnews::pipeline::cmd_ingest},
        {"build-dict", "Label in-sample headlines and build the sentiment dictionary", varnews::pipeline::cmd_build_dict},
        {"regressors", "Build per-sector news regressors", varnews::pipeline::cmd_regressors},
        {"fit", "Fit every model on the in-sample window", varnews::pipeline::cmd_fit},
        {"run", "Rolling VaR, backtests, MCS and combination", varnews::pipeline::cmd_run},
    };
    std::map<CLI::App*, Verb> handlers;
    for (const auto& [name, help, fn] : verbs) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, o);
        handlers[cmd] = fn;
    }

    std::string report_out;
    auto* report = app.add_subcommand("report", "Render report.md from a finished output directory");
    report->add_option("--out", report_out, "Output directory of a previous run")->required();

    std::string synth_dir;
    varnews::pipeline::SynthConfig synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic fixture (ticks, sectors, headlines, config)");
    synth_cmd->add_option("--out", synth_dir, "Fixture directory")->required();
    synth_cmd->add_option("--sectors", synth.sectors, "Number of sectors");
    synth_cmd->add_option("--instruments", synth.instruments_per_sector, "Instruments per sector");
    synth_cmd->add_option("--days", synth.days, "Trading days");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (report->parsed()) {
            varnews::pipeline::cmd_report(report_out);
            std::cout << "wrote " << report_out << "/report.md\n";
            return 0;
        }
        if (synth_cmd->parsed()) {
            varnews::pipeline::cmd_synth(synth_dir, synth);
            std::cout << "wrote fixture to " << synth_dir << "\n";
            return 0;
        }
        for (const auto& [cmd, fn] : handlers) {
            if (!cmd->parsed()) continue;
            const auto config = resolve_config(o);
            const auto manifest = fn(config, o.run);
            for (const auto& w : manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
            std::cout << cmd->get_name() << ": " << manifest["files"].size() << " files in " << config.out_dir.string()
                      << " (config " << manifest["config_hash"].get<std::string>() << ")\n";
        }
        return 0;
    } catch (const varnews::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
