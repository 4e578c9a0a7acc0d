#ifndef PSO_SCHEDULES_HPP
#define PSO_SCHEDULES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pso/rng.hpp"
#include "pso/swarm.hpp"

namespace pso {

enum class KickTarget { Velocity, Position };

/// Epoch-level adaptation state. Owned by the driver, mutated between epochs.
struct ScheduleState
{
    std::size_t epoch = 1;
    double alpha = 1.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    std::size_t particles = 1;

    bool cooling = false;
    double decay_rate = 0.0;          ///< mu in [0, 1]; 0 disables particle decay
    std::size_t min_particles = 2;

    bool stagnation = false;
    double stagnation_tol = 0.0;      ///< tau; kicks when the consensus moves less than this
    double kick_magnitude = 0.0;
    KickTarget kick_target = KickTarget::Velocity;
    std::optional<std::vector<double>> previous_consensus;
};

/// Doubles alpha and divides both diffusions by log(epoch + 2), using the
/// epoch that just ended, then advances the epoch counter. With cooling
/// disabled only the counter moves.
inline ScheduleState cooling_step(ScheduleState s)
{
    if (s.cooling) {
        const double denom = std::log(static_cast<double>(s.epoch) + 2.0);
        s.alpha *= 2.0;
        s.sigma1 /= denom;
        s.sigma2 /= denom;
    }
    ++s.epoch;
    return s;
}

/// ceil(N ((1 - mu) + mu varEnd / varStart)), floored at `min_particles`
/// (or at N when N is already below the floor). A collapsed swarm
/// (varStart = 0) keeps its size.
inline std::size_t particle_decay(std::size_t n, double mu, double var_start, double var_end,
                                  std::size_t min_particles = 2)
{
    if (!(var_start > 0.0) || mu == 0.0) return n;
    // Written as 1 - mu (1 - ratio) so that ratio = 1 or mu = 0 give exactly 1.
    const double factor = 1.0 - mu * (1.0 - var_end / var_start);
    const double target = std::ceil(static_cast<double>(n) * factor);
    std::size_t next = target <= 0.0 ? 0 : static_cast<std::size_t>(target);
    return std::max(next, std::min(min_particles, n));
}

/// Adds kick * sqrt(dt) * N(0, I) to every particle's velocity (or position)
/// when the consensus moved less than tau since the previous call. The
/// previous consensus is updated either way. Returns whether it kicked.
inline bool stagnation_kick(SwarmState& state, ScheduleState& sched, std::span<const double> new_consensus)
{
    bool kick = false;
    if (sched.previous_consensus && sched.previous_consensus->size() == new_consensus.size()) {
        double dist2 = 0.0;
        for (std::size_t k = 0; k < new_consensus.size(); ++k) {
            const double dk = new_consensus[k] - (*sched.previous_consensus)[k];
            dist2 += dk * dk;
        }
        kick = std::sqrt(dist2) < sched.stagnation_tol;
    }
    sched.previous_consensus.emplace(new_consensus.begin(), new_consensus.end());
    if (!kick) return false;

    const double scale = sched.kick_magnitude * std::sqrt(state.dt);
    std::vector<double> z(state.dim());
    for (std::size_t i = 0; i < state.size(); ++i) {
        gaussian_vector(state.seed, StreamTag::StagnationKick, i, state.step, z);
        auto r = sched.kick_target == KickTarget::Velocity ? state.v.row(i) : state.x.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] += scale * z[k];
    }
    return true;
}

} // namespace pso

#endif // PSO_SCHEDULES_HPP
