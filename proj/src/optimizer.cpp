#include "simstack/optimizer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace simstack {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// Scale the left/right column halves of an N x 2N row block by G = blkdiag(D, D^-1).
CMatrix times_g(const CMatrix& row, const CVector& d) {
    const Eigen::Index n = d.size();
    CMatrix out(row.rows(), row.cols());
    out.leftCols(n) = row.leftCols(n) * d.asDiagonal();
    out.rightCols(n) = row.rightCols(n) * d.conjugate().asDiagonal();
    return out;
}

// Scale the top/bottom row halves of a 2N x N column block by G.
CMatrix g_times(const CVector& d, const CMatrix& col) {
    const Eigen::Index n = d.size();
    CMatrix out(col.rows(), col.cols());
    out.topRows(n) = d.asDiagonal() * col.topRows(n);
    out.bottomRows(n) = d.conjugate().asDiagonal() * col.bottomRows(n);
    return out;
}

// Everything the exact-T low-rank perturbation needs for one layer.
struct ExactLayerTerms {
    CMatrix r;   // A^-1 U_l, N x 2N
    CMatrix v;   // V_l, 2N x N
    CMatrix bu;  // H_RI A^-1 U_l, K x 2N
    CMatrix vf;  // V_l A^-1 H_IT, 2N x K
};

struct ExactContext {
    CMatrix h;
    std::vector<ExactLayerTerms> layers;
    std::vector<CVector> theta;
};

ExactContext build_exact_context(const SimStack& stack, const ChannelRealization& ch, FactorTally* tally) {
    const Eigen::Index n = stack.n();
    const auto& media = stack.media_transfer();
    const std::size_t layer_count = stack.layer_count();

    ExactContext ctx;
    for (const auto& l : stack.layers()) ctx.theta.push_back(l.theta_bar());

    // U_l: bottom block row before G_l; V_l: right block column after G_l.
    std::vector<CMatrix> u(layer_count), v(layer_count);
    u[0] = CMatrix::Zero(n, 2 * n);
    u[0].rightCols(n).setIdentity();
    for (std::size_t l = 0; l + 1 < layer_count; ++l) u[l + 1] = times_g(u[l], ctx.theta[l]) * media[l].assemble();
    v[layer_count - 1] = CMatrix::Zero(2 * n, n);
    v[layer_count - 1].bottomRows(n).setIdentity();
    for (std::size_t l = layer_count - 1; l > 0; --l) {
        v[l - 1] = media[l - 1].assemble() * g_times(ctx.theta[l], v[l]);
    }

    const CMatrix a = times_g(u[layer_count - 1], ctx.theta[layer_count - 1]).rightCols(n);
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(a, lu, tally)) {
        throw NonInvertibleTransfer("gradient: T_I22 is singular");
    }
    const CMatrix f = lu.solve(ch.h_it);
    ctx.h = ch.h_ri * f;

    ctx.layers.resize(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        auto& t = ctx.layers[l];
        t.r = lu.solve(u[l]);
        t.bu = ch.h_ri * t.r;
        t.vf = v[l] * f;
        t.v = std::move(v[l]);
    }
    return ctx;
}

// Channel after phi_{l,n} += delta, by the Woodbury identity on the rank-2 change of T_I22.
CMatrix exact_perturbed(const ExactContext& ctx, std::size_t l, Eigen::Index e, double delta) {
    const Eigen::Index n = ctx.theta[l].size();
    const auto& t = ctx.layers[l];
    const cplx g = ctx.theta[l](e);
    const cplx shift = std::polar(1.0, delta);
    Eigen::Matrix2cd c = Eigen::Matrix2cd::Zero();
    c(0, 0) = g * (shift - 1.0);
    c(1, 1) = std::conj(g) * (std::conj(shift) - 1.0);

    const Eigen::Index cols[2] = {e, n + e};
    Eigen::Matrix2cd m;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m(i, j) = (t.v.row(cols[i]) * t.r.col(cols[j]))(0, 0);
    }
    CMatrix bx(t.bu.rows(), 2);
    bx.col(0) = t.bu.col(cols[0]);
    bx.col(1) = t.bu.col(cols[1]);
    CMatrix yf(2, t.vf.cols());
    yf.row(0) = t.vf.row(cols[0]);
    yf.row(1) = t.vf.row(cols[1]);
    const Eigen::Matrix2cd core = (Eigen::Matrix2cd::Identity() + c * m).inverse() * c;
    return ctx.h - bx * core * yf;
}

struct SimplifiedContext {
    CMatrix h;
    std::vector<CMatrix> left;   // K x N, everything after Theta_l
    std::vector<CMatrix> right;  // N x K, everything before Theta_l
    std::vector<CVector> theta;
};

SimplifiedContext build_simplified_context(const SimStack& stack, const ChannelRealization& ch) {
    const auto& media = stack.media();
    const std::size_t layer_count = stack.layer_count();
    SimplifiedContext ctx;
    for (const auto& l : stack.layers()) ctx.theta.push_back(l.theta_bar());
    ctx.left.resize(layer_count);
    ctx.right.resize(layer_count);
    ctx.right[0] = ch.h_it;
    for (std::size_t l = 0; l + 1 < layer_count; ++l) {
        ctx.right[l + 1] = media[l].b21() * (ctx.theta[l].asDiagonal() * ctx.right[l]);
    }
    ctx.left[layer_count - 1] = ch.h_ri;
    for (std::size_t l = layer_count - 1; l > 0; --l) {
        ctx.left[l - 1] = (ctx.left[l] * ctx.theta[l].asDiagonal()) * media[l - 1].b21();
    }
    ctx.h = ctx.left[0] * (ctx.theta[0].asDiagonal() * ctx.right[0]);
    return ctx;
}

CMatrix simplified_perturbed(const SimplifiedContext& ctx, std::size_t l, Eigen::Index e, double delta) {
    const cplx g = ctx.theta[l](e) * (std::polar(1.0, delta) - 1.0);
    return ctx.h + g * (ctx.left[l].col(e) * ctx.right[l].row(e));
}

template <class Perturbed>
RMatrix central_differences(std::size_t layer_count, Eigen::Index n, double h, const PowerAllocation& p, double n0,
                            const Perturbed& perturbed) {
    RMatrix grad(static_cast<Eigen::Index>(layer_count), n);
    const auto total = static_cast<std::int64_t>(layer_count) * n;
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
        const auto l = static_cast<std::size_t>(idx / n);
        const Eigen::Index e = idx % n;
        const double up = sum_rate(perturbed(l, e, h), p, n0);
        const double down = sum_rate(perturbed(l, e, -h), p, n0);
        grad(static_cast<Eigen::Index>(l), e) = (up - down) / (2.0 * h);
    }
    return grad;
}

void check_power(const PowerAllocation& p, Eigen::Index users) {
    if (p.p.size() != users) throw std::invalid_argument("power allocation size differs from K");
}

}  // namespace

const char* to_string(ChannelModel model) {
    switch (model) {
        case ChannelModel::exact_t: return "exact-t";
        case ChannelModel::simplified: return "simplified";
    }
    return "unknown";
}

const char* to_string(InitMode mode) {
    switch (mode) {
        case InitMode::simplified_mrt: return "simplified-mrt";
        case InitMode::zeros: return "zeros";
        case InitMode::random: return "random";
    }
    return "unknown";
}

double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

RMatrix wrap_phases(const RMatrix& phi) { return phi.unaryExpr([](double x) { return wrap_phase(x); }); }

void OptimizerSettings::validate() const {
    std::vector<std::string> errs;
    if (max_iters < 0) errs.emplace_back("max_iters must be >= 0");
    if (!(armijo.step0 > 0)) errs.emplace_back("armijo step0 must be > 0");
    if (!(armijo.backtrack > 0 && armijo.backtrack < 1)) errs.emplace_back("armijo backtrack must lie in (0, 1)");
    if (!(armijo.sufficient_increase > 0 && armijo.sufficient_increase < 1)) {
        errs.emplace_back("armijo sufficient_increase must lie in (0, 1)");
    }
    if (armijo.max_backtracks < 0) errs.emplace_back("armijo max_backtracks must be >= 0");
    if (!(fd_step > 0)) errs.emplace_back("fd_step must be > 0");
    if (!(tol >= 0)) errs.emplace_back("tol must be >= 0");
    if (!errs.empty()) {
        std::ostringstream os;
        os << "invalid optimizer settings:";
        for (const auto& e : errs) os << "\n  " << e;
        throw std::invalid_argument(os.str());
    }
}

PowerAllocation uniform_power(int users, double p_max) {
    if (users < 1) throw std::invalid_argument("uniform_power: K must be >= 1");
    if (!(p_max > 0)) throw std::invalid_argument("uniform_power: P_max must be > 0");
    return {Eigen::VectorXd::Constant(users, p_max / users)};
}

PowerAllocation waterfilling_power(const CMatrix& h, double n0, double p_max) {
    if (h.rows() != h.cols()) throw std::invalid_argument("waterfilling_power: H must be K x K");
    if (!(n0 > 0) || !(p_max > 0)) throw std::invalid_argument("waterfilling_power: N0 and P_max must be > 0");
    const Eigen::Index k = h.rows();
    std::vector<double> inv_gain(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double g = std::norm(h(i, i)) / n0;
        inv_gain[static_cast<std::size_t>(i)] = g > 0 ? 1.0 / g : std::numeric_limits<double>::infinity();
    }
    std::vector<std::size_t> order(inv_gain.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return inv_gain[a] < inv_gain[b]; });

    PowerAllocation out{Eigen::VectorXd::Zero(k)};
    if (!std::isfinite(inv_gain[order.front()])) return uniform_power(static_cast<int>(k), p_max);

    // Largest active set whose water level clears every member's floor.
    std::size_t active = 0;
    double level = 0.0;
    double floor_sum = 0.0;
    for (std::size_t m = 0; m < order.size(); ++m) {
        const double f = inv_gain[order[m]];
        if (!std::isfinite(f)) break;
        const double candidate = (p_max + floor_sum + f) / static_cast<double>(m + 1);
        if (candidate <= f) break;
        floor_sum += f;
        level = candidate;
        active = m + 1;
    }
    double assigned = 0.0;
    for (std::size_t m = 0; m < active; ++m) {
        const double pk = level - inv_gain[order[m]];
        out.p(static_cast<Eigen::Index>(order[m])) = pk;
        assigned += pk;
    }
    // Absorb rounding so the budget is met exactly.
    out.p(static_cast<Eigen::Index>(order.front())) += p_max - assigned;
    return out;
}

double sinr(const CMatrix& h, const PowerAllocation& p, double n0, Eigen::Index k) {
    double interference = 0.0;
    for (Eigen::Index i = 0; i < h.cols(); ++i) {
        if (i != k) interference += p.p(i) * std::norm(h(k, i));
    }
    return p.p(k) * std::norm(h(k, k)) / (interference + n0);
}

double sum_rate(const CMatrix& h, const PowerAllocation& p, double n0) {
    double f = 0.0;
    for (Eigen::Index k = 0; k < h.rows(); ++k) f += std::log2(1.0 + sinr(h, p, n0, k));
    return f;
}

CMatrix evaluate_channel(const SimStack& stack, const ChannelRealization& ch, ChannelModel model,
                         FactorTally* tally) {
    switch (model) {
        case ChannelModel::exact_t: return channel_exact_t(stack, ch, tally);
        case ChannelModel::simplified: return channel_simplified(stack, ch);
    }
    throw std::invalid_argument("unknown channel model");
}

double objective(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p, ChannelModel model,
                 FactorTally* tally) {
    check_power(p, ch.users());
    return sum_rate(evaluate_channel(stack, ch, model, tally), p, ch.noise_psd);
}

RMatrix gradient_fd(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p,
                    const OptimizerSettings& settings, FactorTally* tally) {
    ch.validate(stack.n());
    check_power(p, ch.users());
    const double h = settings.fd_step;
    if (settings.model == ChannelModel::exact_t) {
        const ExactContext ctx = build_exact_context(stack, ch, tally);
        return central_differences(stack.layer_count(), stack.n(), h, p, ch.noise_psd,
                                   [&](std::size_t l, Eigen::Index e, double d) { return exact_perturbed(ctx, l, e, d); });
    }
    const SimplifiedContext ctx = build_simplified_context(stack, ch);
    return central_differences(stack.layer_count(), stack.n(), h, p, ch.noise_psd,
                               [&](std::size_t l, Eigen::Index e, double d) { return simplified_perturbed(ctx, l, e, d); });
}

namespace serial {

RMatrix gradient_fd(const SimStack& stack, const ChannelRealization& ch, const PowerAllocation& p,
                    const OptimizerSettings& settings) {
    const RMatrix phi = stack.phase_matrix();
    const double h = settings.fd_step;
    RMatrix grad(phi.rows(), phi.cols());
    for (Eigen::Index l = 0; l < phi.rows(); ++l) {
        for (Eigen::Index e = 0; e < phi.cols(); ++e) {
            RMatrix up = phi;
            RMatrix down = phi;
            up(l, e) += h;
            down(l, e) -= h;
            const double fu = objective(stack.with_phases(up), ch, p, settings.model);
            const double fd = objective(stack.with_phases(down), ch, p, settings.model);
            grad(l, e) = (fu - fd) / (2.0 * h);
        }
    }
    return grad;
}

}  // namespace serial

GdaResult gda_optimize(const SimStack& stack0, const ChannelRealization& ch, const PowerAllocation& p,
                       const OptimizerSettings& settings, const IterateObserver& observe, FactorTally* tally) {
    settings.validate();
    GdaResult result;
    SimStack stack = stack0.with_phases(wrap_phases(stack0.phase_matrix()));
    double f = objective(stack, ch, p, settings.model, tally);
    result.trace.push_back(f);
    if (observe) observe(0, stack.phase_matrix());

    for (int it = 0; it < settings.max_iters; ++it) {
        const RMatrix grad = gradient_fd(stack, ch, p, settings, tally);
        const double grad_sq = grad.squaredNorm();
        const RMatrix phi = stack.phase_matrix();

        double alpha = settings.armijo.step0;
        bool accepted = false;
        double f_next = f;
        RMatrix phi_next;
        for (int m = 0; m <= settings.armijo.max_backtracks; ++m) {
            phi_next = wrap_phases(phi + alpha * grad);
            f_next = objective(stack.with_phases(phi_next), ch, p, settings.model, tally);
            if (f_next >= f + settings.armijo.sufficient_increase * alpha * grad_sq) {
                accepted = true;
                break;
            }
            alpha *= settings.armijo.backtrack;
        }
        if (!accepted) {
            result.line_search_stalled = true;
            break;
        }
        stack = stack.with_phases(phi_next);
#ifndef NDEBUG
        for (const auto& layer : stack.layers()) {
            const auto g = layer.transfer();
            assert(check_pseudo_unitary(g, default_tolerance(g.n())));
            assert(check_persymmetric(g, default_tolerance(g.n())));
        }
#endif
        const double delta = f_next - f;
        f = f_next;
        result.trace.push_back(f);
        ++result.iterations;
        if (observe) observe(result.iterations, phi_next);
        if (delta < settings.tol) {
            result.converged = true;
            break;
        }
    }
    result.design.phi = stack.phase_matrix();
    return result;
}

double direct_gain(const CMatrix& h) { return h.diagonal().squaredNorm(); }

PhaseDesign init_phases(const SimStack& stack, const ChannelRealization& ch, InitMode mode, std::uint64_t seed) {
    const auto layer_count = static_cast<Eigen::Index>(stack.layer_count());
    const Eigen::Index n = stack.n();
    PhaseDesign design{RMatrix::Zero(layer_count, n)};
    if (mode == InitMode::zeros) return design;
    if (mode == InitMode::random) {
        auto rng = make_rng(seed, 0x1417);
        std::uniform_real_distribution<double> uni(0.0, kTwoPi);
        for (Eigen::Index l = 0; l < layer_count; ++l) {
            for (Eigen::Index e = 0; e < n; ++e) design.phi(l, e) = wrap_phase(uni(rng));
        }
        return design;
    }

    // Coordinate ascent from zero phases. H(phi_{l,e}) = C + exp(j phi) a b^T and
    // sum_k |C_kk + exp(j phi) a_k b_k|^2 peaks at phi = -arg(sum_k a_k b_k conj(C_kk)).
    ch.validate(n);
    SimStack current = stack.with_phases(design.phi);
    for (Eigen::Index l = 0; l < layer_count; ++l) {
        const SimplifiedContext ctx = build_simplified_context(current, ch);
        CMatrix h = ctx.h;
        const auto lu = static_cast<std::size_t>(l);
        for (Eigen::Index e = 0; e < n; ++e) {
            const CMatrix rank1 = ctx.left[lu].col(e) * ctx.right[lu].row(e);
            const cplx old_gain = std::polar(1.0, design.phi(l, e));
            const CMatrix rest = h - old_gain * rank1;
            cplx s = 0.0;
            for (Eigen::Index k = 0; k < h.rows(); ++k) s += rank1(k, k) * std::conj(rest(k, k));
            if (std::abs(s) > 0) design.phi(l, e) = wrap_phase(-std::arg(s));
            h = rest + std::polar(1.0, design.phi(l, e)) * rank1;
        }
        current = current.with_phases(design.phi);
    }
    return design;
}

}  // namespace simstack
