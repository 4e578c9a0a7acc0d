// Minimal library use: one memory-mode run on the 20-dimensional Rastrigin
// function, printing the consensus error every 1000 steps.
#include <cmath>
#include <cstdio>

#include "pso/runner.hpp"

int main()
{
    pso::RunConfig cfg;
    cfg.objective_name = "rastrigin";
    cfg.params.dim = 20;
    cfg.params.particles = 100;
    cfg.params.m = 0.2;
    cfg.params.alpha = 100.0;
    cfg.params.lambda2 = 1.0;
    cfg.params.memory = pso::MemoryMode::Hard;
    cfg.params.lambda1 = 0.4;
    cfg.params.sigma2 = 2.0;
    cfg.params.sigma1 = 0.8;
    cfg.horizon = 100.0;
    cfg.record_interval = 1000;
    cfg.seed = 1;

    const auto report = pso::run(cfg);
    for (const auto& row : report.series) {
        double err = 0.0;
        for (double c : row.consensus) err = std::max(err, std::abs(c));
        std::printf("t = %6.1f  H = %-12.4g best E = %-10.4g |c - x*|_inf = %.4g\n", row.t, row.h, row.best_value, err);
    }
    if (report.diverged) {
        std::printf("diverged at step %llu\n", static_cast<unsigned long long>(*report.divergence_step));
        return 1;
    }
    std::printf("%s after %llu steps (%.2f s)\n", report.success.value_or(false) ? "success" : "no success",
                static_cast<unsigned long long>(report.steps), report.wall_seconds);
    return 0;
}
