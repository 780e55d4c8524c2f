#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simstack/config.hpp"

namespace simstack {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct RunRecord {
    std::string experiment;
    RunMode mode = RunMode::EE;
    int layers = 0;
    int elements = 0;
    int realization = 0;
    int iteration = 0;
    double sum_rate = 0.0;
    double wallclock_ms = 0.0;
    std::uint64_t seed = 0;
    /// Factorizations spent by the optimization run up to this row.
    std::size_t factorizations = 0;
};

struct RunOptions {
    /// Worker threads over realizations; 0 keeps the OpenMP default.
    int jobs = 0;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<std::string> warnings;
    std::string config_hash;
    /// Factorizations spent by all optimization runs.
    std::size_t factorizations = 0;
};

/// Model-validity warnings for the whole run, one per condition.
std::vector<std::string> run_warnings(const ExperimentConfig& cfg);

/// Convergence traces per spacing case, one row per iteration and mode.
ExperimentResult run_convergence(const ExperimentConfig& cfg, const RunOptions& opts = {});
/// Final sum-rate per layer count, realization and mode.
ExperimentResult run_layer_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});
/// Traces for a single user-defined geometry.
ExperimentResult run_custom(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

inline const char* const kColumns[] = {"experiment", "mode", "L", "N", "realization", "iteration",
                                       "sum_rate_bps_hz", "wallclock_ms", "seed", "config_hash"};

void emit_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);
void emit_json(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);
/// Writes <dir>/<name>.<csv|json> and returns the path.
std::filesystem::path emit(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const ExperimentResult& result);

}  // namespace simstack
