#include "simstack/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>

#include <omp.h>

namespace simstack {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// splitmix64 finalizer, used to give each realization its own initializer seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct Job {
    std::string label;
    const SimStack* stack;
    int layers;
    int elements;
};

struct RealizationOutput {
    std::vector<RunRecord> rows;
    std::size_t factorizations = 0;
};

RealizationOutput run_realization(const ExperimentConfig& cfg, const Job& job, int realization, bool full_trace) {
    const SimStack& stack = *job.stack;
    const ChannelRealization ch =
        make_realization(stack.n(), cfg.users, cfg.seed, static_cast<std::uint64_t>(realization), cfg.noise_psd,
                         cfg.p_max);
    const PhaseDesign init = init_phases(stack, ch, cfg.init, mix_seed(cfg.seed, static_cast<std::uint64_t>(realization)));
    const SimStack start = stack.with_phases(init.phi);
    const PowerAllocation power = cfg.power == PowerMode::uniform
                                      ? uniform_power(cfg.users, cfg.p_max)
                                      : waterfilling_power(channel_exact_t(start, ch), cfg.noise_psd, cfg.p_max);

    RealizationOutput out;
    for (RunMode mode : cfg.modes) {
        OptimizerSettings settings = cfg.optimizer;
        settings.model = mode == RunMode::EE ? ChannelModel::exact_t : ChannelModel::simplified;
        const ChannelModel scored = mode == RunMode::SS ? ChannelModel::simplified : ChannelModel::exact_t;

        RunRecord base;
        base.experiment = job.label;
        base.mode = mode;
        base.layers = job.layers;
        base.elements = job.elements;
        base.realization = realization;
        base.seed = cfg.seed;

        std::vector<RunRecord> rows;
        FactorTally tally;
        double scoring_ms = 0.0;
        const auto t0 = Clock::now();
        const IterateObserver observe = [&](int iteration, const RMatrix& phi) {
            RunRecord row = base;
            row.iteration = iteration;
            row.factorizations = tally.factorizations;
            if (scored != settings.model) {
                // Scoring on the exact channel is bookkeeping, not part of the optimizer's cost.
                const auto s0 = Clock::now();
                row.sum_rate = objective(stack.with_phases(phi), ch, power, scored);
                scoring_ms += ms_since(s0);
            }
            row.wallclock_ms = ms_since(t0) - scoring_ms;
            rows.push_back(row);
        };
        const GdaResult res = gda_optimize(start, ch, power, settings, observe, &tally);
        if (scored == settings.model) {
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sum_rate = res.trace[i];
        }
        for (const auto& row : rows) {
            if (!std::isfinite(row.sum_rate) || row.sum_rate < 0) {
                throw NumericalError("non-finite or negative sum-rate in realization " +
                                     std::to_string(realization) + " (" + to_string(mode) + ")");
            }
        }
        out.factorizations += tally.factorizations;
        if (full_trace) {
            out.rows.insert(out.rows.end(), rows.begin(), rows.end());
        } else {
            out.rows.push_back(rows.back());
        }
    }
    return out;
}

// Realizations run in parallel; results are collected in realization order.
void run_jobs(const ExperimentConfig& cfg, const std::vector<Job>& jobs, bool full_trace, const RunOptions& opts,
              ExperimentResult& result) {
    const int runs = cfg.monte_carlo_runs;
    const int threads = opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
    for (const auto& job : jobs) {
        std::vector<RealizationOutput> per(static_cast<std::size_t>(runs));
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int r = 0; r < runs; ++r) {
            try {
                per[static_cast<std::size_t>(r)] = run_realization(cfg, job, r, full_trace);
            } catch (...) {
#pragma omp critical(simstack_run_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        for (auto& p : per) {
            result.records.insert(result.records.end(), p.rows.begin(), p.rows.end());
            result.factorizations += p.factorizations;
        }
    }
}

void require_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
    if (cfg.kind != kind) {
        throw std::invalid_argument(std::string("experiment kind is ") + to_string(cfg.kind) + ", expected " +
                                    to_string(kind));
    }
}

}  // namespace

std::vector<std::string> run_warnings(const ExperimentConfig& cfg) {
    if (cfg.medium != MediumKind::rayleigh_sommerfeld) return {};
    // The element area is shared; the narrowest layer spacing is the worst case.
    const auto geoms = cfg.geometries();
    const auto worst = std::min_element(geoms.begin(), geoms.end(),
                                        [](const ArrayGeometry& a, const ArrayGeometry& b) { return a.l_x < b.l_x; });
    if (worst == geoms.end()) return {};
    return rs_validity_warnings(*worst, cfg.provider().patch_area);
}

ExperimentResult run_convergence(const ExperimentConfig& cfg, const RunOptions& opts) {
    require_kind(cfg, ExperimentKind::convergence);
    validate_geometries(cfg);
    ExperimentResult result;
    result.config_hash = cfg.hash();
    result.warnings = run_warnings(cfg);
    std::vector<SimStack> stacks;
    std::vector<Job> jobs;
    for (const auto& c : cfg.cases) {
        const ArrayGeometry g = cfg.geometry_for_case(c);
        stacks.push_back(build_stack(g, cfg.provider()));
    }
    for (std::size_t i = 0; i < cfg.cases.size(); ++i) {
        jobs.push_back({cfg.name + "-case" + std::to_string(cfg.cases[i].id), &stacks[i],
                        static_cast<int>(stacks[i].layer_count()), static_cast<int>(stacks[i].n())});
    }
    run_jobs(cfg, jobs, true, opts, result);
    return result;
}

ExperimentResult run_layer_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
    require_kind(cfg, ExperimentKind::layer_sweep);
    validate_geometries(cfg);
    ExperimentResult result;
    result.config_hash = cfg.hash();
    result.warnings = run_warnings(cfg);
    std::vector<SimStack> stacks;
    for (int l : cfg.layer_counts) {
        const ArrayGeometry g = cfg.geometry_for_layers(l);
        stacks.push_back(build_stack(g, cfg.provider()));
    }
    std::vector<Job> jobs;
    for (const auto& s : stacks) {
        jobs.push_back({cfg.name, &s, static_cast<int>(s.layer_count()), static_cast<int>(s.n())});
    }
    run_jobs(cfg, jobs, false, opts, result);
    return result;
}

ExperimentResult run_custom(const ExperimentConfig& cfg, const RunOptions& opts) {
    require_kind(cfg, ExperimentKind::custom);
    validate_geometries(cfg);
    ExperimentResult result;
    result.config_hash = cfg.hash();
    result.warnings = run_warnings(cfg);
    const ArrayGeometry g = cfg.custom_geometry();
    const SimStack stack = build_stack(g, cfg.provider());
    const std::vector<Job> jobs{{cfg.name, &stack, g.layers, static_cast<int>(g.elements())}};
    run_jobs(cfg, jobs, true, opts, result);
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    switch (cfg.kind) {
        case ExperimentKind::convergence: return run_convergence(cfg, opts);
        case ExperimentKind::layer_sweep: return run_layer_sweep(cfg, opts);
        case ExperimentKind::custom: return run_custom(cfg, opts);
    }
    throw std::invalid_argument("unknown experiment kind");
}

}  // namespace simstack
