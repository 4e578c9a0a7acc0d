#ifndef PSO_MEANFIELD_HPP
#define PSO_MEANFIELD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "pso/consensus.hpp"
#include "pso/dynamics.hpp"
#include "pso/errors.hpp"
#include "pso/objective.hpp"
#include "pso/parallel.hpp"
#include "pso/rng.hpp"
#include "pso/swarm.hpp"

namespace pso {

struct MfaPoint
{
    std::size_t n = 0;
    double error = 0.0;       ///< mean over retained repetitions
    double std_error = 0.0;   ///< standard error of that mean
    std::size_t retained = 0;

    friend bool operator==(const MfaPoint&, const MfaPoint&) = default;
};

struct LineFit
{
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double half_width = std::numeric_limits<double>::quiet_NaN();   ///< 95% confidence half-width of the slope
};

struct MfaCurve
{
    std::vector<MfaPoint> points;
    std::size_t repetitions = 0;
    std::size_t excluded = 0;
    double excluded_fraction = 0.0;
    LineFit fit;
    /// Every coupled pair consumed identical Gaussian increments.
    bool coupling_verified = true;
};

/// Frozen consensus trajectory: entry k is the consensus point at step k.
using ConsensusPath = std::vector<std::vector<double>>;

inline std::vector<double> state_consensus(const SwarmState& s, const Objective& obj, double alpha)
{
    std::vector<double> values(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) values[i] = obj(s.x.row(i));
    return consensus_point(WeightedEnsemble{s.x.flat(), values, s.dim(), alpha});
}

/// Runs the memoryless system for `steps` steps and returns the consensus
/// point seen at each of them.
inline ConsensusPath reference_consensus(const Objective& obj, const SwarmParams& params, const InitSpec& init,
                                         std::size_t steps)
{
    if (params.has_memory()) throw InvalidArgument("mean-field reference needs the memoryless dynamics");
    SwarmState s = init_swarm(params, init, obj);
    ConsensusPath path;
    path.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        path.push_back(state_consensus(s, obj, params.alpha));
        StepContext ctx;
        ctx.consensus = path.back();
        step_memoryless(s, params, ctx);
    }
    return path;
}

struct CoupledResult
{
    /// max_i sup_k |X^i - Xbar^i|^2 + |V^i - Vbar^i|^2
    double error = 0.0;
    NoiseTally system;
    NoiseTally proxy;
};

/// Interacting system and proxy particles driven by `frozen`, sharing
/// initial data and Brownian increments.
inline CoupledResult coupled_error(const Objective& obj, const SwarmParams& params, const InitSpec& init,
                                   const ConsensusPath& frozen, std::size_t steps)
{
    if (params.has_memory()) throw InvalidArgument("mean-field coupling needs the memoryless dynamics");
    if (frozen.size() < steps) throw InvalidArgument("frozen consensus path is shorter than the horizon");
    CoupledResult out;
    SwarmState sys = init_swarm(params, init, obj);
    SwarmState proxy = sys;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto c = state_consensus(sys, obj, params.alpha);
        StepContext cs;
        cs.consensus = c;
        cs.tally = &out.system;
        StepContext cp;
        cp.consensus = frozen[k];
        cp.tally = &out.proxy;
        step_memoryless(sys, params, cs);
        step_memoryless(proxy, params, cp);
        for (std::size_t i = 0; i < sys.size(); ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < sys.dim(); ++j) {
                const double dx = sys.x(i, j) - proxy.x(i, j);
                const double dv = sys.v(i, j) - proxy.v(i, j);
                e += dx * dx + dv * dv;
            }
            out.error = std::max(out.error, e);
        }
    }
    return out;
}

/// Least-squares line through (x, y) with a 95% t-interval for the slope.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    LineFit f;
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        const double se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
        const boost::math::students_t dist(static_cast<double>(n - 2));
        f.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    }
    return f;
}

/// Coupling error as a function of the swarm size.
///
/// Repetition r at size Ns[j] uses an independent reference of n_ref particles
/// (seed derived from (seed, 0, j, r)) and a coupled system seeded by
/// (seed, 1, j, r). Diverged repetitions are excluded and counted. The fit is
/// over the points with positive mean error.
inline MfaCurve mfa_error_curve(const Objective& obj, const SwarmParams& params, const InitSpec& init,
                                std::span<const std::size_t> ns, std::size_t n_ref, double horizon,
                                std::size_t reps, std::uint64_t seed, std::size_t workers = 1)
{
    if (params.has_memory()) throw InvalidArgument("mean-field experiment needs memory off");
    if (ns.empty()) throw InvalidArgument("particle counts must be nonempty");
    for (std::size_t j = 0; j < ns.size(); ++j) {
        if (ns[j] == 0 || (j > 0 && ns[j] <= ns[j - 1])) throw InvalidArgument("particle counts must increase strictly");
    }
    if (n_ref < 8 * ns.back()) throw InvalidArgument("reference size must be at least 8 max(N)");
    if (reps < 1) throw InvalidArgument("repetitions must be at least 1");
    const double k_real = horizon / params.dt;
    if (!(k_real >= 0.0) || std::abs(k_real - std::round(k_real)) > 1e-9 * std::max(1.0, k_real)) {
        throw InvalidArgument("horizon must be a whole number of steps");
    }
    const auto steps = static_cast<std::size_t>(std::round(k_real));
    params.validate();

    const std::size_t tasks = ns.size() * reps;
    std::vector<double> err(tasks, 0.0);
    std::vector<char> ok(tasks, 0), tally_match(tasks, 1);

    parallel_for(tasks, workers, [&](std::size_t t) {
        const std::size_t j = t / reps;
        const std::size_t r = t % reps;
        try {
            SwarmParams pr = params;
            pr.particles = n_ref;
            InitSpec ir = init;
            ir.seed = derive_seed(seed, 0, j, r);
            const auto path = reference_consensus(obj, pr, ir, steps);

            SwarmParams pn = params;
            pn.particles = ns[j];
            InitSpec in = init;
            in.seed = derive_seed(seed, 1, j, r);
            const auto res = coupled_error(obj, pn, in, path, steps);
            err[t] = res.error;
            ok[t] = std::isfinite(res.error) ? 1 : 0;
            tally_match[t] = res.system == res.proxy ? 1 : 0;
        } catch (const DivergenceError&) {
            ok[t] = 0;
        }
    });

    MfaCurve curve;
    curve.repetitions = reps;
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < ns.size(); ++j) {
        MfaPoint p;
        p.n = ns[j];
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const std::size_t t = j * reps + r;
            curve.coupling_verified = curve.coupling_verified && tally_match[t];
            if (!ok[t]) {
                ++curve.excluded;
                continue;
            }
            ++p.retained;
            sum += err[t];
        }
        if (p.retained > 0) {
            p.error = sum / static_cast<double>(p.retained);
            for (std::size_t r = 0; r < reps; ++r) {
                const std::size_t t = j * reps + r;
                if (ok[t]) sum2 += (err[t] - p.error) * (err[t] - p.error);
            }
            if (p.retained > 1) {
                const double rn = static_cast<double>(p.retained);
                p.std_error = std::sqrt(sum2 / (rn - 1.0) / rn);
            }
            if (p.error > 0.0) {
                lx.push_back(std::log(static_cast<double>(p.n)));
                ly.push_back(std::log(p.error));
            }
        } else {
            p.error = std::numeric_limits<double>::quiet_NaN();
        }
        curve.points.push_back(p);
    }
    curve.excluded_fraction = static_cast<double>(curve.excluded) / static_cast<double>(tasks);
    curve.fit = fit_line(lx, ly);
    return curve;
}

} // namespace pso

#endif // PSO_MEANFIELD_HPP
