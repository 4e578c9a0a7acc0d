#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "pso/objective.hpp"
#include "pso/swarm.hpp"

using namespace pso;

namespace {

SwarmParams params(std::size_t n, std::size_t d, MemoryMode mem = MemoryMode::Off)
{
    SwarmParams p;
    p.particles = n;
    p.dim = d;
    p.memory = mem;
    return p;
}

} // namespace

TEST(SwarmParams, DefaultsValidateAndFrictionFollowsInertia)
{
    SwarmParams p;
    EXPECT_NO_THROW(p.validate());
    EXPECT_DOUBLE_EQ(p.friction(), 0.8);
    p.gamma = 0.3;
    EXPECT_EQ(p.friction(), 0.3);
}

TEST(SwarmParams, RejectsSignViolations)
{
    auto bad = [](auto mutate) {
        SwarmParams p;
        p.memory = MemoryMode::Soft;
        mutate(p);
        EXPECT_THROW(p.validate(), InvalidArgument);
    };
    bad([](SwarmParams& p) { p.m = 0.0; });
    bad([](SwarmParams& p) { p.gamma = -0.1; });
    bad([](SwarmParams& p) { p.lambda1 = -1.0; });
    bad([](SwarmParams& p) { p.lambda2 = -1.0; });
    bad([](SwarmParams& p) { p.sigma1 = -1.0; });
    bad([](SwarmParams& p) { p.sigma2 = -1.0; });
    bad([](SwarmParams& p) { p.alpha = 0.0; });
    bad([](SwarmParams& p) { p.kappa = 0.0; });
    bad([](SwarmParams& p) { p.theta = -1.0; });
    bad([](SwarmParams& p) { p.beta = 0.0; });
    bad([](SwarmParams& p) { p.dt = 0.0; });
    bad([](SwarmParams& p) { p.particles = 0; });
    bad([](SwarmParams& p) { p.dim = 0; });
    bad([](SwarmParams& p) { p.sigma2 = std::numeric_limits<double>::quiet_NaN(); });
}

TEST(SwarmParams, MemoryOffForbidsLocalTerms)
{
    SwarmParams p;
    p.lambda1 = 0.4;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.lambda1 = 0.0;
    p.sigma1 = 0.1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.memory = MemoryMode::Hard;
    EXPECT_NO_THROW(p.validate());
}

TEST(SwarmParams, HardModeCanonicalTriple)
{
    SwarmParams p;
    p.memory = MemoryMode::Hard;
    p.dt = 0.01;
    p.kappa = 3.0;
    p.theta = 2.0;
    p.beta = 1.0;
    const auto c = p.canonical();
    EXPECT_DOUBLE_EQ(c.kappa, 50.0);
    EXPECT_EQ(c.theta, 0.0);
    EXPECT_TRUE(std::isinf(c.beta));
    p.memory = MemoryMode::Soft;
    EXPECT_EQ(p.canonical().kappa, 3.0);
}

TEST(InitSwarm, DegenerateGaussianIsPointMass)
{
    InitSpec spec;
    spec.position = Distribution::gaussian({1.5, -2.0}, {0.0});
    spec.velocity = Distribution::gaussian({0.0}, {0.0});
    const auto s = init_swarm(params(5, 2, MemoryMode::Hard), spec, make_sphere(2));
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(s.x(i, 0), 1.5);
        EXPECT_EQ(s.x(i, 1), -2.0);
        EXPECT_EQ(s.v(i, 0), 0.0);
        EXPECT_EQ(s.best_values[i], 6.25);
    }
    EXPECT_EQ(s.y, s.x);
}

TEST(InitSwarm, SameSeedIsBitIdentical)
{
    InitSpec spec;
    spec.seed = 314;
    const auto obj = make_rastrigin(3);
    const auto a = init_swarm(params(20, 3, MemoryMode::Hard), spec, obj);
    const auto b = init_swarm(params(20, 3, MemoryMode::Hard), spec, obj);
    EXPECT_EQ(a, b);
    spec.seed = 315;
    EXPECT_FALSE(a == init_swarm(params(20, 3, MemoryMode::Hard), spec, obj));
}

TEST(InitSwarm, ShapesAndMemoryLayout)
{
    const auto obj = make_rastrigin(4);
    const auto off = init_swarm(params(7, 4), InitSpec{}, obj);
    EXPECT_EQ(off.x.rows(), 7u);
    EXPECT_EQ(off.v.cols(), 4u);
    EXPECT_FALSE(off.has_memory());
    EXPECT_TRUE(off.best_values.empty());
    EXPECT_EQ(off.step, 0u);

    const auto on = init_swarm(params(7, 4, MemoryMode::Hard), InitSpec{}, obj);
    EXPECT_EQ(on.y, on.x);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(on.best_values[i], obj(on.y.row(i)));
}

TEST(InitSwarm, DefaultInitialLawSampleMean)
{
    const std::size_t n = 100, d = 20;
    const auto s = init_swarm(params(n, d), InitSpec{}, make_rastrigin(d));
    double mean = 0.0;
    for (double v : s.x.flat()) mean += v;
    mean /= static_cast<double>(n * d);
    EXPECT_LT(std::abs(mean - 2.0), 3.0 * 2.0 / std::sqrt(static_cast<double>(n * d)));
}

TEST(InitSwarm, UniformBoxRespectsBounds)
{
    InitSpec spec;
    spec.position = Distribution::uniform({-1.0, 2.0}, {1.0, 3.0});
    const auto s = init_swarm(params(200, 2), spec, make_sphere(2));
    for (std::size_t i = 0; i < 200; ++i) {
        EXPECT_GE(s.x(i, 0), -1.0);
        EXPECT_LT(s.x(i, 0), 1.0);
        EXPECT_GE(s.x(i, 1), 2.0);
        EXPECT_LT(s.x(i, 1), 3.0);
    }
}

TEST(InitSwarm, Errors)
{
    EXPECT_THROW(init_swarm(params(5, 3), InitSpec{}, make_sphere(2)), InvalidArgument);
    InitSpec bad;
    bad.position = Distribution::gaussian({0.0}, {-1.0});
    EXPECT_THROW(init_swarm(params(5, 2), bad, make_sphere(2)), InvalidArgument);
    bad.position = Distribution::uniform({1.0}, {0.0});
    EXPECT_THROW(init_swarm(params(5, 2), bad, make_sphere(2)), InvalidArgument);
    bad.position = Distribution::gaussian({0.0, 1.0, 2.0}, {1.0});
    EXPECT_THROW(init_swarm(params(5, 2), bad, make_sphere(2)), InvalidArgument);
}

TEST(InitSwarm, ParticleDrawsDoNotDependOnSwarmSize)
{
    InitSpec spec;
    spec.seed = 8;
    const auto small = init_swarm(params(10, 3), spec, make_sphere(3));
    const auto large = init_swarm(params(80, 3), spec, make_sphere(3));
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(small.x(i, k), large.x(i, k));
            EXPECT_EQ(small.v(i, k), large.v(i, k));
        }
    }
}

TEST(Diffusion, HandExamples)
{
    EXPECT_EQ(apply_diffusion(Diffusion::Anisotropic, std::vector<double>{1.0, -2.0}, std::vector<double>{0.5, 0.5}),
              (std::vector<double>{0.5, -1.0}));
    EXPECT_EQ(apply_diffusion(Diffusion::Isotropic, std::vector<double>{3.0, 4.0}, std::vector<double>{1.0, 0.0}),
              (std::vector<double>{5.0, 0.0}));
    const std::vector<double> zero = {0.0, 0.0}, noise = {0.7, -1.3};
    EXPECT_EQ(apply_diffusion(Diffusion::Anisotropic, zero, noise), zero);
    EXPECT_EQ(apply_diffusion(Diffusion::Isotropic, zero, noise), zero);
    EXPECT_THROW(apply_diffusion(Diffusion::Isotropic, zero, std::vector<double>{1.0}), InvalidArgument);
}

TEST(SwarmState, SelectParticlesKeepsRowsAndCache)
{
    auto s = init_swarm(params(6, 2, MemoryMode::Hard), InitSpec{}, make_sphere(2));
    const auto before = s;
    const std::vector<std::size_t> keep = {1, 4};
    s.select_particles(keep);
    ASSERT_EQ(s.size(), 2u);
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            EXPECT_EQ(s.x(j, k), before.x(keep[j], k));
            EXPECT_EQ(s.v(j, k), before.v(keep[j], k));
            EXPECT_EQ(s.y(j, k), before.y(keep[j], k));
        }
        EXPECT_EQ(s.best_values[j], before.best_values[keep[j]]);
    }
}
