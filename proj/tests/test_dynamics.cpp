#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "pso/consensus.hpp"
#include "pso/dynamics.hpp"
#include "pso/objective.hpp"

using namespace pso;

namespace {

SwarmState one_d(std::vector<double> x, std::vector<double> v, std::vector<double> y = {})
{
    SwarmState s;
    s.x = ParticleArray(x.size(), 1);
    s.v = ParticleArray(v.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        s.x(i, 0) = x[i];
        s.v(i, 0) = v[i];
    }
    if (!y.empty()) {
        s.y = ParticleArray(y.size(), 1);
        for (std::size_t i = 0; i < y.size(); ++i) s.y(i, 0) = y[i];
        s.best_values.assign(y.size(), 0.0);
    }
    s.dt = 0.1;
    return s;
}

SwarmParams unit_params()
{
    SwarmParams p;
    p.m = 1.0;
    p.gamma = 0.0;
    p.dt = 0.1;
    p.lambda2 = 1.0;
    p.particles = 1;
    p.dim = 1;
    return p;
}

StepContext at(const std::vector<double>& c)
{
    StepContext ctx;
    ctx.consensus = c;
    return ctx;
}

std::vector<double> swarm_consensus(const SwarmState& s, const Objective& obj, double alpha)
{
    const ParticleArray& src = s.has_memory() ? s.y : s.x;
    std::vector<double> vals(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) vals[i] = obj(src.row(i));
    return consensus_point({src.flat(), vals, s.dim(), alpha});
}

} // namespace

TEST(StepMemoryless, PureFrictionDecay)
{
    auto p = unit_params();
    p.m = 0.5;
    p.gamma = 0.5;
    p.lambda2 = 0.0;
    auto s = one_d({0.3}, {2.0});
    const std::vector<double> c = {10.0};
    step_memoryless(s, p, at(c));
    EXPECT_DOUBLE_EQ(s.v(0, 0), 2.0 * 0.5 / (0.5 + 0.1 * 0.5));
    EXPECT_EQ(s.step, 1u);
}

TEST(StepMemoryless, ParticleAtConsensusStaysPut)
{
    auto p = unit_params();
    p.sigma2 = 5.0;
    auto s = one_d({1.5}, {0.0});
    s.seed = 3;
    const std::vector<double> c = {1.5};
    step_memoryless(s, p, at(c));
    EXPECT_EQ(s.v(0, 0), 0.0);
    EXPECT_EQ(s.x(0, 0), 1.5);
}

TEST(StepMemoryless, SingleStepHandComputation)
{
    auto s = one_d({0.0}, {0.0});
    const std::vector<double> c = {1.0};
    step_memoryless(s, unit_params(), at(c));
    EXPECT_NEAR(s.v(0, 0), 0.1, 1e-15);
    EXPECT_NEAR(s.x(0, 0), 0.01, 1e-15);
}

TEST(StepMemoryless, NoiseEntersWithSqrtDt)
{
    // Oracle: the same formula written out with the draw fetched directly.
    auto p = unit_params();
    p.gamma = 0.5;
    p.sigma2 = 0.7;
    p.diffusion = Diffusion::Isotropic;
    p.dim = 2;
    SwarmState s;
    s.x = ParticleArray(1, 2);
    s.v = ParticleArray(1, 2);
    s.x(0, 0) = 0.5;
    s.x(0, 1) = -1.0;
    s.v(0, 0) = 0.25;
    s.dt = 0.1;
    s.seed = 19;
    s.step = 4;
    const std::vector<double> c = {2.0, 1.0};
    std::vector<double> b(2);
    gaussian_vector(19, StreamTag::ConsensusNoise, 0, 4, b);
    const double norm = std::hypot(1.5, 2.0);
    const double den = 1.0 + 0.1 * 0.5;
    const double v0 = (0.25 + 0.1 * 1.5 + std::sqrt(0.1) * 0.7 * norm * b[0]) / den;
    const double v1 = (0.0 + 0.1 * 2.0 + std::sqrt(0.1) * 0.7 * norm * b[1]) / den;
    step_memoryless(s, p, at(c));
    EXPECT_NEAR(s.v(0, 0), v0, 1e-15);
    EXPECT_NEAR(s.v(0, 1), v1, 1e-15);
    EXPECT_NEAR(s.x(0, 0), 0.5 + 0.1 * v0, 1e-15);
    EXPECT_NEAR(s.x(0, 1), -1.0 + 0.1 * v1, 1e-15);
}

TEST(StepMemory, SingleStepHandComputation)
{
    auto p = unit_params();
    p.memory = MemoryMode::Hard;
    p.lambda1 = 1.0;
    auto s = one_d({0.0}, {0.0}, {1.0});
    s.best_values = {1.0};
    const auto obj = make_sphere(1);
    StepContext ctx = at({});
    const std::vector<double> c = {2.0};
    ctx.consensus = c;
    ctx.objective = [&](std::span<const double> x) { return obj(x); };
    step_memory(s, p.canonical(), ctx);
    EXPECT_NEAR(s.v(0, 0), 0.3, 1e-15);
    EXPECT_NEAR(s.x(0, 0), 0.03, 1e-15);
    // E(0.03) < 1, so the local best jumps to X.
    EXPECT_EQ(s.y(0, 0), s.x(0, 0));
    EXPECT_EQ(s.best_values[0], obj(s.x.row(0)));
}

TEST(StepMemory, CollapsedSwarmIsFixedPoint)
{
    const auto obj = make_rastrigin(1);
    for (auto mode : {MemoryMode::Hard, MemoryMode::Soft}) {
        auto p = unit_params();
        p.memory = mode;
        p.lambda1 = 0.7;
        p.sigma1 = 3.0;
        p.sigma2 = 2.0;
        auto s = one_d({0.4, 0.4}, {0.0, 0.0}, {0.4, 0.4});
        s.best_values = {obj(s.y.row(0)), obj(s.y.row(1))};
        s.seed = 123;
        const auto before = s;
        const std::vector<double> c = {0.4};
        StepContext ctx = at(c);
        ctx.objective = [&](std::span<const double> x) { return obj(x); };
        step_memory(s, p.canonical(), ctx);
        EXPECT_EQ(s.x, before.x);
        EXPECT_EQ(s.v, before.v);
        EXPECT_EQ(s.y, before.y);
        EXPECT_EQ(s.step, 1u);
    }
}

TEST(StepMemoryless, CollapsedSwarmIsFixedPoint)
{
    auto p = unit_params();
    p.sigma2 = 4.0;
    auto s = one_d({-1.0, -1.0, -1.0}, {0.0, 0.0, 0.0});
    const auto before = s;
    const std::vector<double> c = {-1.0};
    step_memoryless(s, p, at(c));
    EXPECT_EQ(s.x, before.x);
    EXPECT_EQ(s.v, before.v);
}

TEST(StepMemory, MatchesMemorylessWithoutLocalTerms)
{
    const std::size_t n = 30, d = 3;
    const auto obj = make_rastrigin(d);
    SwarmParams off;
    off.particles = n;
    off.dim = d;
    off.sigma2 = 0.8;
    off.alpha = 30.0;
    SwarmParams on = off;
    on.memory = MemoryMode::Hard;
    InitSpec spec;
    spec.seed = 5;
    auto a = init_swarm(off, spec, obj);
    auto b = init_swarm(on.canonical(), spec, obj);
    for (int k = 0; k < 200; ++k) {
        const auto ca = swarm_consensus(a, obj, off.alpha);
        // Y = X is not maintained by the memory kernel, so the consensus of the
        // memoryless system drives both to isolate the kernels.
        StepContext cta = at(ca);
        StepContext ctb = at(ca);
        ctb.objective = [&](std::span<const double> x) { return obj(x); };
        step_memoryless(a, off, cta);
        step_memory(b, on.canonical(), ctb);
        ASSERT_EQ(a.x, b.x);
        ASSERT_EQ(a.v, b.v);
    }
}

TEST(SmoothedSwitch, Examples)
{
    EXPECT_EQ(smoothed_switch(1.0, 1.0, 5.0, 0.3), 1.3);
    EXPECT_NEAR(smoothed_switch(0.0, 1.0, 1e9, 0.25), 2.25, 1e-12);
    EXPECT_NEAR(smoothed_switch(1.0, 0.0, 1.0, 0.0), 1.0 + std::tanh(-1.0), 1e-15);
    EXPECT_NEAR(smoothed_switch(1.0, 0.0, 1.0, 0.0), 0.23840, 1e-5);  // quoted truncated
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(smoothed_switch(0.0, 1.0, inf, 0.0), 2.0);
    EXPECT_EQ(smoothed_switch(1.0, 0.0, inf, 0.0), 0.0);
    EXPECT_EQ(smoothed_switch(1.0, 1.0, inf, 0.0), 1.0);
}

TEST(SmoothedSwitch, StaysInOpenBand)
{
    for (double diff : {-3.0, -0.1, 0.0, 0.2, 4.0}) {
        for (double theta : {0.0, 0.5}) {
            const double s = smoothed_switch(0.0, diff, 1.0, theta);
            EXPECT_GT(s, theta);
            EXPECT_LT(s, 2.0 + theta);
        }
    }
}

TEST(LocalBest, HardReplacementOnlyOnStrictImprovement)
{
    auto p = unit_params();
    p.memory = MemoryMode::Hard;
    auto s = one_d({0.5}, {0.0}, {9.0});
    StepContext ctx = at({});
    double value = 3.0;
    ctx.objective = [&](std::span<const double>) { return value; };

    s.best_values = {5.0};
    update_local_best(s, p, ctx);
    EXPECT_EQ(s.y(0, 0), 0.5);
    EXPECT_EQ(s.best_values[0], 3.0);

    s.y(0, 0) = 9.0;
    s.best_values = {5.0};
    value = 5.0;
    update_local_best(s, p, ctx);
    EXPECT_EQ(s.y(0, 0), 9.0);
    EXPECT_EQ(s.best_values[0], 5.0);
}

TEST(LocalBest, SoftSaturationMatchesHardReplacement)
{
    auto p = unit_params();
    p.memory = MemoryMode::Soft;
    p.kappa = 1.0 / (2.0 * p.dt);
    p.theta = 0.0;
    p.beta = 1e9;
    const auto obj = make_sphere(1);
    auto s = one_d({0.5}, {0.0}, {2.0});
    s.best_values = {4.0};
    StepContext ctx = at({});
    ctx.objective = [&](std::span<const double> x) { return obj(x); };
    update_local_best(s, p, ctx);
    EXPECT_NEAR(s.y(0, 0), 0.5, 1e-9);
    EXPECT_NEAR(s.best_values[0], 0.25, 1e-9);
}

TEST(LocalBest, HardCacheStaysExactAndMonotone)
{
    const std::size_t n = 20, d = 4;
    const auto obj = make_rastrigin(d);
    SwarmParams p;
    p.particles = n;
    p.dim = d;
    p.memory = MemoryMode::Hard;
    p.lambda1 = 0.4;
    p.sigma1 = 0.4;
    p.sigma2 = 1.0;
    p = p.canonical();
    auto s = init_swarm(p, InitSpec{}, obj);
    for (int k = 0; k < 500; ++k) {
        const auto before = s.best_values;
        const auto c = swarm_consensus(s, obj, p.alpha);
        StepContext ctx = at(c);
        ctx.objective = [&](std::span<const double> x) { return obj(x); };
        step(s, p, ctx);
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_LE(s.best_values[i], before[i]);
            ASSERT_EQ(s.best_values[i], obj(s.y.row(i)));
        }
    }
}

TEST(Step, PartialUpdateTouchesOnlyActiveParticles)
{
    auto p = unit_params();
    p.sigma2 = 1.0;
    auto s = one_d({0.0, 1.0, 2.0, 3.0}, {0.1, 0.2, 0.3, 0.4});
    s.seed = 2;
    const auto before = s;
    const std::vector<std::size_t> active = {1, 3};
    const std::vector<double> c = {1.5};
    StepContext ctx = at(c);
    ctx.active = active;
    NoiseTally tally;
    ctx.tally = &tally;
    step_memoryless(s, p, ctx);
    EXPECT_EQ(s.x(0, 0), before.x(0, 0));
    EXPECT_EQ(s.v(2, 0), before.v(2, 0));
    EXPECT_NE(s.x(1, 0), before.x(1, 0));
    EXPECT_NE(s.x(3, 0), before.x(3, 0));
    EXPECT_EQ(tally.count, 2u);
}

TEST(Step, DivergenceCarriesStep)
{
    auto p = unit_params();
    p.dt = 1.0;
    auto s = one_d({0.0}, {1e300});
    s.step = 17;
    const std::vector<double> c = {0.0};
    try {
        step_memoryless(s, p, at(c));
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.step(), 17u);
    }
}

TEST(Step, RejectsModeMismatch)
{
    auto p = unit_params();
    auto s = one_d({0.0}, {0.0});
    const std::vector<double> c = {0.0};
    EXPECT_THROW(step_memory(s, p, at(c)), InvalidArgument);
    p.memory = MemoryMode::Hard;
    EXPECT_THROW(step_memoryless(s, p, at(c)), InvalidArgument);
    EXPECT_THROW(step_memoryless(s, unit_params(), at(std::vector<double>{0.0, 1.0})), InvalidArgument);
}

TEST(Step, DeterministicLimitFirstOrder)
{
    // Sphere, sigma = 0: errors at dt, dt/2, dt/4 against dt/64 shrink like dt.
    const std::size_t n = 10, d = 2;
    const auto obj = make_sphere(d);
    auto run_to = [&](double dt, double horizon) {
        SwarmParams p;
        p.particles = n;
        p.dim = d;
        p.dt = dt;
        p.alpha = 1.0;
        auto s = init_swarm(p, InitSpec{}, obj);
        const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
        for (std::size_t k = 0; k < steps; ++k) {
            const auto c = swarm_consensus(s, obj, p.alpha);
            step_memoryless(s, p, at(c));
        }
        return s;
    };
    const auto ref = run_to(0.1 / 64.0, 1.0);
    std::vector<double> errs;
    for (double dt : {0.1, 0.05, 0.025}) {
        const auto s = run_to(dt, 1.0);
        double e = 0.0;
        for (std::size_t j = 0; j < s.x.flat().size(); ++j) {
            e = std::max(e, std::abs(s.x.flat()[j] - ref.x.flat()[j]));
            e = std::max(e, std::abs(s.v.flat()[j] - ref.v.flat()[j]));
        }
        errs.push_back(e);
    }
    EXPECT_GT(std::log2(errs[0] / errs[1]), 0.85);
    EXPECT_GT(std::log2(errs[1] / errs[2]), 0.85);
}
