#include "support.hpp"
#include "varnews/config.hpp"
#include "varnews/csv.hpp"
#include "varnews/pipeline.hpp"
#include "varnews/sentiment.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>

using namespace varnews;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VARNEWS_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string two_model_config(const std::string& extra = "") {
    return R"(seed = 5
[data]
ticks_dir = "ticks"
sector_map = "sectors.csv"
headlines = "headlines.csv"
[roll]
refit_every = 400
taus = [0.01]
[fit]
starts = 1
max_iterations = 1500
[models]
dynamics = ["GARCH"]
laws = ["N"]
regressors = ["N", "IV"]
[mcs]
B = 300
)" + extra;
}

std::set<std::string> files_under(const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.insert(fs::relative(e.path(), root).generic_string());
    }
    return out;
}

}  // namespace

TEST_CASE("TOML subset parsing") {
    const auto j = config::parse_toml(R"(# comment
seed = 42
name = "a \"b\""   # trailing
[roll]
taus = [
  0.01, # one
  0.001,
]
flag = true
[a.b]
"quoted key" = -1.5e-3
)",
                                      "t.toml");
    CHECK(j["seed"] == 42);
    CHECK(j["name"] == "a \"b\"");
    CHECK(j["roll"]["taus"] == nlohmann::json::array({0.01, 0.001}));
    CHECK(j["roll"]["flag"] == true);
    CHECK(j["a"]["b"]["quoted key"] == -1.5e-3);
    CHECK_THROWS_AS((void)config::parse_toml("a = 1\na = 2\n", "t.toml"), ValidationError);
    try {
        (void)config::parse_toml("a = 1\nb = \n", "x.toml");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("x.toml:2") != std::string::npos);
    }
}

TEST_CASE("config hash ignores key order and defaults to the full grid") {
    const auto dir = testing_support::temp_dir("cfg");
    const auto a = config::parse_toml("seed = 3\n[roll]\nrefit_every = 50\ntaus = [0.01]\n[mcs]\nB = 400\nalpha = 0.1\n", "a");
    const auto b = config::parse_toml("[mcs]\nalpha = 0.1\nB = 400\n[roll]\ntaus = [0.01]\nrefit_every = 50\n", "b");
    auto jb = b;
    jb["seed"] = 3;
    const auto ca = pipeline::config_from_json(a, dir);
    const auto cb = pipeline::config_from_json(jb, dir);
    CHECK(pipeline::config_hash(ca) == pipeline::config_hash(cb));
    CHECK(ca.models.size() == 27);
    CHECK(ca.models == pipeline::full_model_grid());
    auto cc = ca;
    cc.seed = 4;
    CHECK(pipeline::config_hash(cc) != pipeline::config_hash(ca));
    CHECK_THROWS_AS((void)pipeline::config_from_json(config::parse_toml("[roll]\nrefit = 5\n", "c"), dir),
                    ValidationError);
    CHECK_THROWS_AS(pipeline::validate(ca), ValidationError);  // data paths unset
    fs::remove_all(dir);
}

TEST_CASE("CLI exit codes and dry run") {
    const auto dir = testing_support::temp_dir("cli");
    CHECK(run_cli("synth --out " + dir.string() + " --sectors 1 --days 3") == 0);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("ingest --config " + (dir / "missing.toml").string()) == 1);

    csv::write_file(dir / "bad.toml", "[data]\nticks_dir = \"nowhere\"\nsector_map = \"sectors.csv\"\nheadlines = \"headlines.csv\"\n");
    CHECK(run_cli("ingest --config " + (dir / "bad.toml").string()) == 1);

    CHECK(run_cli("ingest --config " + (dir / "config.toml").string() + " --dry-run --out " + (dir / "dry").string()) == 0);
    CHECK(files_under(dir / "dry") == std::set<std::string>{"manifest.json"});

    CHECK(run_cli("ingest --config " + (dir / "config.toml").string() + " --out " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "tables" / "summary_stats.csv"));

    // A malformed tick row fails validation with a nonzero exit.
    {
        std::ofstream f(dir / "ticks" / "Ene1.csv", std::ios::app);
        f << "not-a-time,1,1\r\n";
    }
    CHECK(run_cli("ingest --config " + (dir / "config.toml").string() + " --out " + (dir / "broken").string()) == 1);
    const auto manifest = nlohmann::json::parse(csv::read_file(dir / "broken" / "manifest.json"));
    CHECK(manifest["status"] == "failed");
    CHECK(manifest["error"].get<std::string>().find("Ene1.csv") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("nineteen-sector fixture ingests to nineteen sector series") {
    const auto dir = testing_support::temp_dir("s19");
    pipeline::SynthConfig sc;
    sc.sectors = 19;
    sc.instruments_per_sector = 1;
    sc.days = 2;
    pipeline::cmd_synth(dir, sc);
    auto cfg = pipeline::load_config(dir / "config.toml");
    const auto m = pipeline::cmd_ingest(cfg, {});
    std::size_t sector_files = 0;
    for (const auto& f : m["files"]) {
        const auto s = f.get<std::string>();
        sector_files += s.rfind("bars/sectors/", 0) == 0 && s.find("_300s.csv") != std::string::npos;
    }
    CHECK(sector_files == 19);
    const auto stats = csv::parse(csv::read_file(cfg.out_dir / "tables" / "summary_stats.csv"), "stats");
    CHECK(stats.size() == 20);
    fs::remove_all(dir);
}

TEST_CASE("dictionary build is deterministic and the threshold override matters") {
    const auto dir = testing_support::temp_dir("dict");
    pipeline::cmd_synth(dir, {});
    auto cfg = pipeline::load_config(dir / "config.toml");
    cfg.out_dir = dir / "a";
    (void)pipeline::cmd_build_dict(cfg, {});
    cfg.out_dir = dir / "b";
    (void)pipeline::cmd_build_dict(cfg, {});
    const auto da = csv::read_file(dir / "a" / "sentiment" / "dictionary.json");
    CHECK(da == csv::read_file(dir / "b" / "sentiment" / "dictionary.json"));
    CHECK(csv::read_file(dir / "a" / "sentiment" / "labels.csv") == csv::read_file(dir / "b" / "sentiment" / "labels.csv"));

    cfg.out_dir = dir / "c";
    cfg.f_threshold = 0.0;
    (void)pipeline::cmd_build_dict(cfg, {});
    const auto loose = sent::dictionary_from_json(csv::read_file(dir / "c" / "sentiment" / "dictionary.json"));
    const auto dflt = sent::dictionary_from_json(da);
    CHECK(loose.entries.size() > dflt.entries.size());
    fs::remove_all(dir);
}

TEST_CASE("two-model run produces the complete artifact tree") {
    const auto dir = testing_support::temp_dir("run");
    pipeline::cmd_synth(dir, {});
    csv::write_file(dir / "two.toml", two_model_config());
    const auto cfg = pipeline::load_config(dir / "two.toml");
    CHECK(cfg.models.size() == 2);
    pipeline::RunOptions opts;
    opts.timings = true;
    const auto m = pipeline::cmd_run(cfg, opts);
    CHECK(m["status"] == "ok");
    const std::set<std::string> listed(m["files"].begin(), m["files"].end());
    CHECK(listed == files_under(cfg.out_dir));
    for (const char* f : {"tables/summary_stats.csv", "sentiment/dictionary.json", "regressors/Energy.csv",
                          "panels/Energy/var_tau0.01.csv", "panels/Energy/sigma2_tau0.01.csv", "panels/Finance/meta.json",
                          "backtest/Energy_tau0.01.csv", "mcs/Finance_tau0.01.json", "combine/Energy_tau0.01.csv",
                          "combine/Energy_tau0.01.json", "tables/mcs_composition_tau0.01.csv",
                          "tables/combination_tau0.01.csv"}) {
        CAPTURE(f);
        CHECK(listed.count(f) == 1);
    }
    for (const auto& stage : m["stages"]) CHECK(stage.contains("seconds"));

    const auto report = pipeline::cmd_report(cfg.out_dir);
    CHECK(fs::exists(cfg.out_dir / "report.md"));
    const std::set<std::string> after(report["files"].begin(), report["files"].end());
    CHECK(after == files_under(cfg.out_dir));
    fs::remove_all(dir);
}
