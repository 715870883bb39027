#pragma once

#include "sapinn/losses.hpp"
#include "sapinn/optim.hpp"
#include "sapinn/oracles.hpp"
#include "sapinn/problems.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sapinn {

inline constexpr int kConfigSchema = 1;

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "SAPINN_OUTPUT_ROOT";

/// Residual-driven growth of the interior set during the Adam phase.
struct AdaptiveConfig {
    int interval = 1000;  // Adam iterations between rounds
    int add = 500;        // points added per interior block per round
    int target = 2500;    // stop once a block holds this many points
    int pool_factor = 10;
};

struct SamplingConfig {
    std::optional<SamplingStrategy> strategy;  // problem default when unset
    SampleCounts counts;                       // problem defaults for missing keys
    std::uint64_t seed = 0;
    /// Parametric mode spreads points over one more dimension: every count is
    /// multiplied by `parametric_factor` and raised to at least `parametric_min_count`.
    int parametric_factor = 4;
    int parametric_min_count = 20;
    AdaptiveConfig adaptive;
};

/// Loss-term sweep over one or two parameter inputs on a regular grid.
struct SweepSpec {
    std::vector<std::string> params;
    std::vector<double> lo;
    std::vector<double> hi;
    int points = 21;

    std::string file_name() const;
};

struct EvaluationConfig {
    std::vector<int> grid;  // nodes per space-time axis
    std::vector<double> times;  // explicit evaluation times (time-dependent problems)
    std::vector<SweepSpec> sweeps;
    int oracle_grid = 129;
    InterfaceScheme interface_scheme = InterfaceScheme::strong;
    int fd_cells = 400;
};

struct TimingConfig {
    std::vector<int> sensitivity_counts{1, 2, 4, 9};
    int iterations = 20;
};

/// Everything one experiment needs. Missing keys in the JSON form take the
/// problem's defaults, so `{"schema": 1, "problem": "adv_diff"}` is complete.
struct ExperimentConfig {
    std::string problem = "adv_diff";
    nlohmann::json problem_options = nlohmann::json::object();
    TrainingMode mode = TrainingMode::sa;
    int hidden_layers = 5;
    int hidden_width = 20;
    std::string activation = "tanh";
    std::uint64_t init_seed = 0;
    OptimizerConfig optimizer;
    LossWeights weights;
    SamplingConfig sampling;
    EvaluationConfig evaluation;
    TimingConfig timing;
    std::string output_dir;  // relative paths resolve against the output root
};

/// Parses and validates a config document; fills problem defaults.
/// Throws SchemaError on any violation (unknown keys included).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of a resolved config (all defaults explicit).
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical config without its output directory, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

ProblemSpec build_problem(const ExperimentConfig& config);
NetworkSpec build_network_spec(const ExperimentConfig& config, const ProblemSpec& problem);
/// Initial collocation set, after the parametric count adjustment.
CollocationSet build_points(const ExperimentConfig& config, const ProblemSpec& problem);

/// `$SAPINN_OUTPUT_ROOT`, or `results` in the working directory.
std::filesystem::path output_root();
/// Absolute `output_dir`, else the root joined with `output_dir` or `<problem>_<mode>_<hash>`.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct RunOptions {
    bool write_outputs = true;
    std::ostream* log = nullptr;  // progress lines
};

struct RunResult {
    Network network;
    TrainingTrace trace;
    OptimStatus status = OptimStatus::completed;
    nlohmann::json metrics;
    std::filesystem::path directory;
    std::vector<std::string> files;  // relative to `directory`

    bool healthy() const { return status != OptimStatus::diverged; }
};

/// Builds the problem, samples, trains (Adam, then quasi-Newton), evaluates
/// against the oracles and writes the bundle: config.json, checkpoint.json,
/// trace.csv, fields/*.csv, sweep_*.csv and metrics.json.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Metrics and field files of a trained network; writes into `directory` when given.
nlohmann::json evaluate_network(const ExperimentConfig& config, const ProblemSpec& problem, const Network& network,
                                const CollocationSet& points, const std::filesystem::path* directory,
                                std::vector<std::string>* files = nullptr);

/// Parameter-sweep table: one row per grid node, parameters then loss_f.
struct SweepTable {
    std::vector<std::string> params;
    std::vector<std::vector<double>> rows;

    void write_csv(std::ostream& out) const;
    /// Row of the smallest loss.
    std::size_t argmin() const;
};

/// loss_f on the interior points of `points` with the named parameter inputs
/// swept over a `points` x ... grid. Throws std::invalid_argument for a
/// parameter that is not a network input.
SweepTable sweep_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                      const SweepSpec& sweep);

struct TimingRow {
    int sensitivity_count = 0;
    int iterations = 0;
    double seconds_per_iteration = 0.0;  // median
};

/// SA training cost on poisson9 against the number of sensitivity parameters.
std::vector<TimingRow> timing_study(const ExperimentConfig& config);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

}  // namespace sapinn
