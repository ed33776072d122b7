#pragma once

#include "varnews/combine.hpp"
#include "varnews/estimation.hpp"
#include "varnews/forecasting.hpp"
#include "varnews/mcs.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace varnews::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
    std::filesystem::path ticks_dir;
    std::filesystem::path sector_map;
    std::filesystem::path headlines;
    std::filesystem::path out_dir = "out";
    std::int64_t label_interval = 120;
    std::int64_t model_interval = 300;
    fc::RollConfig roll;
    est::FitConfig fit;
    std::vector<vol::ModelSpec> models;  // default: full 3 x 3 x 3 grid
    mcs::MCSConfig mcs;
    double kernel_sign = -1.0;
    bool optimize_kappa = true;
    int kappa_iterations = 2000;
    double f_threshold = -1.0;  // negative: 75th percentile of nonzero scores
    std::size_t dq_lags = 4;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    /// Canonical JSON form (paths as given); the config hash is taken over its sorted dump.
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Reads a TOML experiment file. Relative data paths resolve against the file's directory.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Throws ValidationError when an invariant fails or a data path does not exist.
void validate(const ExperimentConfig& config);

[[nodiscard]] std::vector<vol::ModelSpec> full_model_grid();

/// FNV-1a 64 of the key-sorted JSON dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& config);

struct RunOptions {
    bool dry_run = false;
    /// Record per-stage wall-clock seconds in the manifest (breaks byte-identical reruns).
    bool timings = false;
};

/// Entry points of the CLI verbs. Each writes its outputs under config.out_dir together with
/// manifest.json and returns the manifest. Upstream stages are recomputed in memory.
nlohmann::json cmd_ingest(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json cmd_build_dict(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json cmd_regressors(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json cmd_fit(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json cmd_run(const ExperimentConfig& config, const RunOptions& options);
/// Summarizes the tables of a finished run in `out_dir` as report.md and adds it to the manifest.
nlohmann::json cmd_report(const std::filesystem::path& out_dir);

struct SynthConfig {
    std::size_t sectors = 2;
    std::size_t instruments_per_sector = 2;
    std::size_t days = 12;
    std::uint64_t seed = 7;
    double headline_rate = 0.03;  // per instrument-minute
};

/// Writes ticks/, sectors.csv, headlines.csv and config.toml of a synthetic market under `dir`.
void cmd_synth(const std::filesystem::path& dir, const SynthConfig& config);

}  // namespace varnews::pipeline
