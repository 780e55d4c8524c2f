#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "simstack/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOther = 1;

void print_issues(const simstack::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << "\n";
}

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::string modes;
    int jobs = 0;
};

int cmd_run(const RunArgs& args) {
    using namespace simstack;
    ExperimentConfig cfg = load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.modes.empty()) {
        try {
            cfg.modes = parse_modes(args.modes);
        } catch (const std::invalid_argument& e) {
            throw ConfigError({std::string("--modes: ") + e.what()});
        }
    }
    if (!args.format.empty()) cfg.format = args.format == "json" ? OutputFormat::json : OutputFormat::csv;
    if (!args.out.empty()) cfg.output_dir = args.out;
    validate_geometries(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(cfg, RunOptions{args.jobs});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

    const auto path = emit(cfg.output_dir, cfg, result);
    std::cout << "wrote " << result.records.size() << " records to " << path.string() << " (config " << result.config_hash
              << ", " << seconds << " s)\n";
    return kExitOk;
}

int cmd_validate(const std::string& path) {
    using namespace simstack;
    const ExperimentConfig cfg = load_config(path);
    validate_geometries(cfg);
    std::cout << path << ": ok (" << to_string(cfg.kind) << ", " << cfg.monte_carlo_runs << " realizations, config "
              << cfg.hash() << ")\n";
    for (const auto& [key, value] : cfg.echo()) std::cout << "  " << key << " = " << value << "\n";
    for (const auto& w : run_warnings(cfg)) std::cerr << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_count_inversions(int max_layers) {
    using namespace simstack;
    std::printf("%4s  %18s  %12s  %14s\n", "L", "S-model (counted)", "quartic fit", "T-model");
    for (int l = 2; l <= max_layers; ++l) {
        std::printf("%4d  %18zu  %12lld  %14d\n", l, count_inversions_s(l), inversion_count_quartic_fit(l), 1);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stacked-metasurface channel models and sum-rate experiments"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
    run_cmd->add_option("config", run.config, "Config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Override the experiment seed");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--format", run.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    run_cmd->add_option("--modes", run.modes, "Comma-separated subset of EE,SE,SS");
    run_cmd->add_option("--jobs", run.jobs, "Parallel realizations (0: all cores)")->check(CLI::NonNegativeNumber);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config file and print the resolved settings");
    validate_cmd->add_option("config", validate_path, "Config file")->required();

    int max_layers = 6;
    auto* count_cmd = app.add_subcommand("count-inversions", "Tabulate factorizations per channel evaluation");
    count_cmd->add_option("--L", max_layers, "Largest layer count")->required()->check(CLI::Range(2, 10));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*validate_cmd) return cmd_validate(validate_path);
        if (*count_cmd) return cmd_count_inversions(max_layers);
    } catch (const simstack::ConfigError& e) {
        print_issues(e);
        return kExitConfig;
    } catch (const simstack::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
