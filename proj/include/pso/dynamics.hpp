#ifndef PSO_DYNAMICS_HPP
#define PSO_DYNAMICS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pso/errors.hpp"
#include "pso/rng.hpp"
#include "pso/swarm.hpp"

namespace pso {

/// Coordinates beyond this magnitude count as an explosion of the swarm.
inline constexpr double kDivergenceThreshold = 1e100;

/// Everything a kernel needs besides the state and the parameters.
struct StepContext
{
    /// Consensus point of the active ensemble (from X without memory, from Y with).
    std::span<const double> consensus;
    /// Objective the local bests are judged by (full objective or current batch).
    std::function<double(std::span<const double>)> objective;
    /// Particles to advance; empty means all of them (full update).
    std::span<const std::size_t> active;
    /// Optional record of every Gaussian increment consumed.
    NoiseTally* tally = nullptr;
};

/// 1 + theta + tanh(beta (E(y) - E(x))). beta may be +infinity.
inline double smoothed_switch(double e_at_x, double e_at_y, double beta, double theta)
{
    const double diff = e_at_y - e_at_x;
    double arg = 0.0;
    if (diff != 0.0) arg = std::isinf(beta) ? (diff > 0.0 ? HUGE_VAL : -HUGE_VAL) : beta * diff;
    return 1.0 + theta + std::tanh(arg);
}

namespace detail {

template <class Fn>
void for_active(const SwarmState& s, const StepContext& ctx, Fn&& fn)
{
    if (ctx.active.empty()) {
        for (std::size_t i = 0; i < s.size(); ++i) fn(i);
    } else {
        for (std::size_t i : ctx.active) {
            if (i >= s.size()) throw InvalidArgument("active particle index out of range");
            fn(i);
        }
    }
}

inline bool exploded(std::span<const double> r) noexcept
{
    for (double z : r) {
        if (!(std::abs(z) <= kDivergenceThreshold)) return true;  // also catches NaN
    }
    return false;
}

/// Semi-implicit velocity update shared by both kernels:
///   V <- (m V + dt * drift + sqrt(dt) * noise) / (m + dt gamma),
/// drift = lambda2 (c - X) [+ lambda1 (Y - X)],
/// noise = sigma2 D(c - X) B2 [+ sigma1 D(Y - X) B1].
inline void advance(SwarmState& s, const SwarmParams& p, const StepContext& ctx, bool with_memory)
{
    const std::size_t d = s.dim();
    if (ctx.consensus.size() != d) throw InvalidArgument("consensus point has wrong dimension");
    const double gamma = p.friction();
    const double inv = 1.0 / (p.m + p.dt * gamma);
    const double c_vel = p.m * inv;
    const double c_drift = p.dt * inv;
    const double c_noise = std::sqrt(p.dt) * inv;
    const bool local_terms = with_memory && (p.lambda1 != 0.0 || p.sigma1 != 0.0);

    std::vector<double> to_c(d), to_y(d), b1(d), b2(d), d1(d), d2(d);
    for_active(s, ctx, [&](std::size_t i) {
        auto x = s.x.row(i);
        auto v = s.v.row(i);
        for (std::size_t k = 0; k < d; ++k) to_c[k] = ctx.consensus[k] - x[k];
        if (p.sigma2 != 0.0) {
            gaussian_vector(s.seed, StreamTag::ConsensusNoise, i, s.step, b2);
            if (ctx.tally) ctx.tally->add(i, s.step, b2);
            apply_diffusion(p.diffusion, to_c, b2, d2);
        }
        if (local_terms) {
            auto y = s.y.row(i);
            for (std::size_t k = 0; k < d; ++k) to_y[k] = y[k] - x[k];
            if (p.sigma1 != 0.0) {
                gaussian_vector(s.seed, StreamTag::LocalBestNoise, i, s.step, b1);
                if (ctx.tally) ctx.tally->add(i, s.step, b1);
                apply_diffusion(p.diffusion, to_y, b1, d1);
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            double drift = p.lambda2 * to_c[k];
            double noise = p.sigma2 != 0.0 ? p.sigma2 * d2[k] : 0.0;
            if (local_terms) {
                if (p.lambda1 != 0.0) drift += p.lambda1 * to_y[k];
                if (p.sigma1 != 0.0) noise += p.sigma1 * d1[k];
            }
            v[k] = c_vel * v[k] + c_drift * drift + c_noise * noise;
            x[k] += p.dt * v[k];
        }
        if (exploded(x) || exploded(v)) throw DivergenceError(s.step);
    });
}

} // namespace detail

/// Local-best update for the active particles, run after X has moved.
///
/// Hard mode replaces Y by X only on strict improvement of the active
/// objective. Soft mode takes one Euler step of
///   dY = kappa (X - Y) S(X, Y) dt.
inline void update_local_best(SwarmState& s, const SwarmParams& p, const StepContext& ctx)
{
    if (!s.has_memory() || p.memory == MemoryMode::Off) throw InvalidArgument("update_local_best needs memory");
    if (!ctx.objective) throw InvalidArgument("step context has no objective");
    const std::size_t d = s.dim();
    if (p.memory == MemoryMode::Hard) {
        detail::for_active(s, ctx, [&](std::size_t i) {
            auto x = s.x.row(i);
            const double ex = ctx.objective(x);
            if (ex < s.best_values[i]) {
                auto y = s.y.row(i);
                for (std::size_t k = 0; k < d; ++k) y[k] = x[k];
                s.best_values[i] = ex;
            }
        });
    } else {
        detail::for_active(s, ctx, [&](std::size_t i) {
            auto x = s.x.row(i);
            auto y = s.y.row(i);
            const double ex = ctx.objective(x);
            const double ey = ctx.objective(y);
            const double rate = p.dt * p.kappa * smoothed_switch(ex, ey, p.beta, p.theta);
            for (std::size_t k = 0; k < d; ++k) y[k] += rate * (x[k] - y[k]);
            s.best_values[i] = ctx.objective(y);
        });
    }
}

/// One step of the memoryless dynamics; advances the step counter once.
inline void step_memoryless(SwarmState& s, const SwarmParams& p, const StepContext& ctx)
{
    if (p.has_memory()) throw InvalidArgument("step_memoryless called with memory enabled");
    detail::advance(s, p, ctx, false);
    ++s.step;
}

/// One step of the dynamics with memory, followed by the local-best update.
inline void step_memory(SwarmState& s, const SwarmParams& p, const StepContext& ctx)
{
    if (!p.has_memory() || !s.has_memory()) throw InvalidArgument("step_memory called without memory");
    detail::advance(s, p, ctx, true);
    update_local_best(s, p, ctx);
    ++s.step;
}

/// Dispatches on the memory mode.
inline void step(SwarmState& s, const SwarmParams& p, const StepContext& ctx)
{
    if (p.has_memory()) {
        step_memory(s, p, ctx);
    } else {
        step_memoryless(s, p, ctx);
    }
}

} // namespace pso

#endif // PSO_DYNAMICS_HPP
