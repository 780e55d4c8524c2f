#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "simstack/channel.hpp"

namespace simstack {

enum class ChannelModel { exact_t, simplified };

const char* to_string(ChannelModel model);

/// Wraps every entry into [0, 2 pi).
double wrap_phase(double phi);
RMatrix wrap_phases(const RMatrix& phi);

/// Design variable Phi, one row per layer, entries in [0, 2 pi).
struct PhaseDesign {
    RMatrix phi;
};

struct ArmijoSettings {
    double step0 = 1.0;
    double backtrack = 0.5;
    double sufficient_increase = 1e-4;
    int max_backtracks = 50;
};

struct OptimizerSettings {
    int max_iters = 100;
    ArmijoSettings armijo;
    double fd_step = 1e-5;
    double tol = 1e-6;
    ChannelModel model = ChannelModel::exact_t;

    void validate() const;
};

struct PowerAllocation {
    Eigen::VectorXd p;

    double total() const { return p.sum(); }
};

PowerAllocation uniform_power(int users, double p_max);

/// Water-filling on the direct gains |H_kk|^2 / N0, interference ignored.
PowerAllocation waterfilling_power(const CMatrix& h, double n0, double p_max);

double sinr(const CMatrix& h, const PowerAllocation& p, double n0, Eigen::Index k);

/// Sum of log2(1 + SINR_k), bits/s/Hz.
double sum_rate(const CMatrix& h, const PowerAllocation& p, double n0);

CMatrix evaluate_channel(const SimStack& stack, const ChannelRealization& ch, ChannelModel model,
                         FactorTally* tally = nullptr);

double objective(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p, ChannelModel model,
                 FactorTally* tally = nullptr);

/// Central finite-difference gradient of the sum-rate with respect to every
/// phase. Perturbed channels come from low-rank updates of one base
/// evaluation, evaluated in parallel over phase coordinates.
RMatrix gradient_fd(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p,
                    const OptimizerSettings& settings, FactorTally* tally = nullptr);

namespace serial {
/// Same central differences by 2 L N full channel evaluations.
RMatrix gradient_fd(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p,
                    const OptimizerSettings& settings);
}  // namespace serial

struct GdaResult {
    PhaseDesign design;
    /// Objective before the first step, then after every accepted step.
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
    /// Armijo backtracking ran out of trials; `design` is the last accepted iterate.
    bool line_search_stalled = false;
};

/// Called with the iteration index and phases of the initial point and of
/// every accepted iterate.
using IterateObserver = std::function<void(int iteration, const RMatrix& phi)>;

/// Projected gradient ascent with Armijo backtracking, starting from the
/// phases stored in `stack0`.
GdaResult gda_optimize(const SimStack& stack0, const ChannelRealization& ch, const PowerAllocation& p,
                       const OptimizerSettings& settings, const IterateObserver& observe = {},
                       FactorTally* tally = nullptr);

enum class InitMode { simplified_mrt, zeros, random };

const char* to_string(InitMode mode);

/// simplified_mrt: one sweep of per-element coordinate ascent of
/// sum_k |[H_simplified]_kk|^2, each coordinate set in closed form.
PhaseDesign init_phases(const SimStack& stack, const ChannelRealization& ch, InitMode mode, std::uint64_t seed = 0);

/// sum_k |[H]_kk|^2, the quantity the simplified_mrt initializer maximizes.
double direct_gain(const CMatrix& h);

}  // namespace simstack
