#include <gtest/gtest.h>

#include <random>

#include "simstack/optimizer.hpp"
#include "test_support.hpp"

using namespace simstack;
using namespace simstack::testing;

namespace {

// Water level by bisection on sum_k max(0, mu - 1/g_k) = P.
Eigen::VectorXd waterfill_bisection(const Eigen::VectorXd& gains, double p_max) {
    double lo = 0.0, hi = p_max + 1.0 / gains.minCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mu = 0.5 * (lo + hi);
        double used = 0.0;
        for (Eigen::Index k = 0; k < gains.size(); ++k) used += std::max(0.0, mu - 1.0 / gains(k));
        (used > p_max ? hi : lo) = mu;
    }
    const double mu = 0.5 * (lo + hi);
    Eigen::VectorXd p(gains.size());
    for (Eigen::Index k = 0; k < gains.size(); ++k) p(k) = std::max(0.0, mu - 1.0 / gains(k));
    return p;
}

struct Instance {
    SimStack stack;
    ChannelRealization ch;
    PowerAllocation p;
};

Instance coupled_instance(std::uint64_t seed, int layers = 3, Eigen::Index n = 6, int users = 2) {
    std::mt19937_64 rng(seed);
    auto stack = random_stack(layers, n, rng);
    auto ch = random_channel(n, users, rng);
    return {std::move(stack), std::move(ch), uniform_power(users, 2.0)};
}

}  // namespace

TEST(Sinr, IdentityChannelHasNoInterference) {
    const CMatrix h = CMatrix::Identity(2, 2);
    const auto p = uniform_power(2, 2.0);
    EXPECT_DOUBLE_EQ(sinr(h, p, 1.0, 0), 1.0);
    EXPECT_DOUBLE_EQ(sinr(h, p, 1.0, 1), 1.0);
    EXPECT_DOUBLE_EQ(sum_rate(h, p, 1.0), 2.0);
}

TEST(Sinr, ZeroDiagonalGivesZeroRate) {
    CMatrix h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    const auto p = uniform_power(2, 2.0);
    EXPECT_EQ(sinr(h, p, 1.0, 0), 0.0);
    EXPECT_EQ(sum_rate(h, p, 1.0), 0.0);
}

TEST(Sinr, MatchesScalarExpansion) {
    CMatrix h(2, 2);
    h << cplx(0.3, -1.1), cplx(0.7, 0.2), cplx(-0.4, 0.5), cplx(1.5, 0.1);
    const PowerAllocation p{Eigen::Vector2d(1.0, 1.0)};
    const double g0 = std::norm(h(0, 0)) / (std::norm(h(0, 1)) + 1.0);
    const double g1 = std::norm(h(1, 1)) / (std::norm(h(1, 0)) + 1.0);
    EXPECT_NEAR(sinr(h, p, 1.0, 0), g0, 1e-15);
    EXPECT_NEAR(sum_rate(h, p, 1.0), std::log2(1 + g0) + std::log2(1 + g1), 1e-14);
}

TEST(Sinr, InvariantToCommonPhase) {
    std::mt19937_64 rng(1);
    const CMatrix h = random_matrix(3, 3, rng);
    const auto p = uniform_power(3, 2.0);
    const CMatrix rotated = h * std::polar(1.0, 0.77);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(sinr(rotated, p, 1.0, k), sinr(h, p, 1.0, k), 1e-14);
}

TEST(Power, UniformSplitsBudgetExactly) {
    const auto p = uniform_power(2, 2.0);
    EXPECT_DOUBLE_EQ(p.p(0), 1.0);
    EXPECT_DOUBLE_EQ(p.p(1), 1.0);
    EXPECT_DOUBLE_EQ(uniform_power(1, 2.0).p(0), 2.0);
    EXPECT_NEAR(uniform_power(7, 3.0).total(), 3.0, 1e-12);
    EXPECT_THROW(uniform_power(0, 1.0), std::invalid_argument);
}

TEST(Power, WaterfillingEqualGainsIsUniform) {
    const CMatrix h = CMatrix::Identity(3, 3) * 2.0;
    const auto p = waterfilling_power(h, 1.0, 3.0);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(p.p(k), 1.0, 1e-12);
}

TEST(Power, WaterfillingSkipsDeadUser) {
    CMatrix h = CMatrix::Zero(2, 2);
    h(1, 1) = 1.0;
    const auto p = waterfilling_power(h, 1.0, 2.0);
    EXPECT_EQ(p.p(0), 0.0);
    EXPECT_NEAR(p.p(1), 2.0, 1e-12);
}

TEST(Power, WaterfillingMatchesBisection) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix h = random_matrix(3, 3, rng);
        const double n0 = 0.5;
        const double p_max = 0.05 + 0.2 * trial;
        Eigen::VectorXd gains(3);
        for (Eigen::Index k = 0; k < 3; ++k) gains(k) = std::norm(h(k, k)) / n0;
        const auto p = waterfilling_power(h, n0, p_max);
        EXPECT_LT((p.p - waterfill_bisection(gains, p_max)).lpNorm<Eigen::Infinity>(), 1e-10);
        EXPECT_NEAR(p.total(), p_max, 1e-12);
        EXPECT_GE(p.p.minCoeff(), 0.0);
    }
}

TEST(Phases, WrapIntoPrincipalRange) {
    for (double x : {-7.0, -1e-18, 0.0, 3.0, 2 * kPi, 13.0}) {
        const double w = wrap_phase(x);
        EXPECT_GE(w, 0.0);
        EXPECT_LT(w, 2 * kPi);
        EXPECT_NEAR(std::cos(w), std::cos(x), 1e-12);
    }
}

TEST(Objective, PhaseWrapInvariance) {
    auto inst = coupled_instance(3);
    const RMatrix phi = inst.stack.phase_matrix();
    const RMatrix m = RMatrix::NullaryExpr(phi.rows(), phi.cols(), [](Eigen::Index i, Eigen::Index j) { return double((i + 2 * j) % 5) - 2; });
    const double a = objective(inst.stack, inst.ch, inst.p, ChannelModel::exact_t);
    const double b = objective(inst.stack.with_phases(phi + 2 * kPi * m), inst.ch, inst.p, ChannelModel::exact_t);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
}

TEST(Gradient, LowRankMatchesFullEvaluations) {
    for (ChannelModel model : {ChannelModel::exact_t, ChannelModel::simplified}) {
        auto inst = coupled_instance(4, 3, 6, 2);
        OptimizerSettings s;
        s.model = model;
        const RMatrix fast = gradient_fd(inst.stack, inst.ch, inst.p, s);
        const RMatrix slow = serial::gradient_fd(inst.stack, inst.ch, inst.p, s);
        EXPECT_LT((fast - slow).norm() / slow.norm(), 1e-6) << to_string(model);
    }
}

TEST(Gradient, SecantCheckAlongRandomDirection) {
    auto inst = coupled_instance(5, 3, 6, 2);
    OptimizerSettings s;
    const RMatrix g = gradient_fd(inst.stack, inst.ch, inst.p, s);
    std::mt19937_64 rng(6);
    RMatrix d = random_matrix(3, 6, rng).real();
    d /= d.norm();
    const double eps = 1e-4;
    const RMatrix phi = inst.stack.phase_matrix();
    const double up = objective(inst.stack.with_phases(phi + eps * d), inst.ch, inst.p, s.model);
    const double down = objective(inst.stack.with_phases(phi - eps * d), inst.ch, inst.p, s.model);
    const double secant = (up - down) / (2 * eps);
    const double directional = (g.array() * d.array()).sum();
    EXPECT_NEAR(directional, secant, 1e-4 * std::abs(secant));
}

TEST(Gradient, DecoupledPhaseHasZeroDerivative) {
    // K = 1 and a single layer: |H_11| does not depend on a phase whose element has no path.
    RisLayer layer(Eigen::Vector2d(0.3, 1.1));
    SimStack stack({layer}, std::vector<BlockTwoPort>{});
    ChannelRealization ch;
    ch.h_it = CMatrix(2, 1);
    ch.h_it << 1.0, 0.0;
    ch.h_ri = CMatrix(1, 2);
    ch.h_ri << cplx(0.5, 0.5), 2.0;
    const auto g = gradient_fd(stack, ch, uniform_power(1, 2.0), OptimizerSettings{});
    EXPECT_NEAR(g(0, 1), 0.0, 1e-6);
    EXPECT_NEAR(g(0, 0), 0.0, 1e-6);  // a single path: the phase only rotates H
}

TEST(Gda, TraceIsMonotoneAndStartsAtInitialObjective) {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        auto inst = coupled_instance(seed);
        OptimizerSettings s;
        s.max_iters = 30;
        const auto res = gda_optimize(inst.stack, inst.ch, inst.p, s);
        EXPECT_DOUBLE_EQ(res.trace.front(), objective(inst.stack, inst.ch, inst.p, s.model));
        for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_GE(res.trace[i], res.trace[i - 1]);
        EXPECT_EQ(res.trace.size(), static_cast<std::size_t>(res.iterations) + 1);
        EXPECT_TRUE((res.design.phi.array() >= 0).all() && (res.design.phi.array() < 2 * kPi).all());
    }
}

TEST(Gda, ZeroIterationsReturnsInitialPoint) {
    auto inst = coupled_instance(10);
    OptimizerSettings s;
    s.max_iters = 0;
    const auto res = gda_optimize(inst.stack, inst.ch, inst.p, s);
    ASSERT_EQ(res.trace.size(), 1u);
    EXPECT_EQ(res.iterations, 0);
    EXPECT_LT((res.design.phi - wrap_phases(inst.stack.phase_matrix())).norm(), 1e-15);
}

TEST(Gda, IsDeterministic) {
    auto inst = coupled_instance(11);
    OptimizerSettings s;
    s.max_iters = 15;
    const auto a = gda_optimize(inst.stack, inst.ch, inst.p, s);
    const auto b = gda_optimize(inst.stack, inst.ch, inst.p, s);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.design.phi, b.design.phi);
}

TEST(Gda, ObserverSeesEveryAcceptedIterate) {
    auto inst = coupled_instance(12);
    OptimizerSettings s;
    s.max_iters = 10;
    std::vector<double> seen;
    const auto res = gda_optimize(inst.stack, inst.ch, inst.p, s, [&](int, const RMatrix& phi) {
        seen.push_back(objective(inst.stack.with_phases(phi), inst.ch, inst.p, s.model));
    });
    ASSERT_EQ(seen.size(), res.trace.size());
    for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_NEAR(seen[i], res.trace[i], 1e-12 * std::max(1.0, seen[i]));
}

TEST(Gda, SingleElementToyStopsImmediately) {
    // N = L = K = 1: |H| is invariant to the only phase, so nothing can improve.
    SimStack stack({RisLayer(Eigen::VectorXd::Constant(1, 0.4))}, std::vector<BlockTwoPort>{});
    ChannelRealization ch;
    ch.h_it = CMatrix::Constant(1, 1, cplx(0.8, 0.1));
    ch.h_ri = CMatrix::Constant(1, 1, cplx(-0.3, 0.9));
    OptimizerSettings s;
    const auto res = gda_optimize(stack, ch, uniform_power(1, 2.0), s);
    EXPECT_LE(res.iterations, 1);
    EXPECT_NEAR(res.trace.back(), res.trace.front(), s.tol);
}

TEST(Gda, ReachesNearStationaryPoint) {
    auto inst = coupled_instance(13, 2, 4, 2);
    OptimizerSettings s;
    s.max_iters = 3000;
    s.tol = 0.0;
    const auto res = gda_optimize(inst.stack, inst.ch, inst.p, s);
    const auto final_stack = inst.stack.with_phases(res.design.phi);
    const RMatrix g = gradient_fd(final_stack, inst.ch, inst.p, s);
    EXPECT_LT(g.lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(Settings, ValidationListsEveryProblem) {
    OptimizerSettings s;
    s.armijo.backtrack = 1.5;
    s.fd_step = 0;
    try {
        s.validate();
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("backtrack"), std::string::npos);
        EXPECT_NE(msg.find("fd_step"), std::string::npos);
    }
}

TEST(Init, ZerosAndRandomModes) {
    auto inst = coupled_instance(14);
    EXPECT_EQ(init_phases(inst.stack, inst.ch, InitMode::zeros).phi.norm(), 0.0);
    const auto a = init_phases(inst.stack, inst.ch, InitMode::random, 99);
    const auto b = init_phases(inst.stack, inst.ch, InitMode::random, 99);
    const auto c = init_phases(inst.stack, inst.ch, InitMode::random, 100);
    EXPECT_EQ(a.phi, b.phi);
    EXPECT_NE(a.phi, c.phi);
    EXPECT_TRUE((a.phi.array() >= 0).all() && (a.phi.array() < 2 * kPi).all());
}

TEST(Init, CoordinateAscentDominatesZeros) {
    // The sweep maximizes sum_k |[H_simplified]_kk|^2 coordinate by coordinate
    // starting from zero phases, so it can never end below the zero design.
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        auto inst = coupled_instance(seed, 3, 8, 2);
        const auto zeros = inst.stack.with_phases(RMatrix::Zero(3, 8));
        const auto mrt = inst.stack.with_phases(init_phases(inst.stack, inst.ch, InitMode::simplified_mrt).phi);
        EXPECT_GE(direct_gain(channel_simplified(mrt, inst.ch)),
                  direct_gain(channel_simplified(zeros, inst.ch)) * (1 - 1e-12))
            << "seed " << seed;
    }
}

TEST(Init, EachCoordinateIsAtItsOptimum) {
    // After the sweep the last layer's coordinates are optimal given the rest.
    auto inst = coupled_instance(15, 2, 4, 2);
    const RMatrix phi = init_phases(inst.stack, inst.ch, InitMode::simplified_mrt).phi;
    const double best = direct_gain(channel_simplified(inst.stack.with_phases(phi), inst.ch));
    for (int step = 0; step < 16; ++step) {
        RMatrix probe = phi;
        probe(1, 3) += 2 * kPi * step / 16.0;
        EXPECT_LE(direct_gain(channel_simplified(inst.stack.with_phases(probe), inst.ch)), best * (1 + 1e-12));
    }
}
