#ifndef PSO_RUNNER_HPP
#define PSO_RUNNER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pso/consensus.hpp"
#include "pso/diagnostics.hpp"
#include "pso/dynamics.hpp"
#include "pso/errors.hpp"
#include "pso/objective.hpp"
#include "pso/parallel.hpp"
#include "pso/rng.hpp"
#include "pso/schedules.hpp"
#include "pso/swarm.hpp"

namespace pso {

enum class UpdateMode { Full, Partial };

inline std::string to_string(UpdateMode u) { return u == UpdateMode::Full ? "full" : "partial"; }

struct ScheduleConfig
{
    bool cooling = false;
    double decay_rate = 0.0;
    std::size_t min_particles = 2;
    bool stagnation = false;
    std::optional<double> stagnation_tol;   ///< defaults to 1e-4 sqrt(d)
    double kick_magnitude = 1.0;
    KickTarget kick_target = KickTarget::Velocity;
};

struct RunConfig
{
    std::string objective_name = "rastrigin";
    /// Overrides objective_name when set.
    std::shared_ptr<const Objective> objective;
    SwarmParams params;
    InitSpec init;
    std::size_t data_batch = 0;       ///< n_E; 0 means all M terms
    std::size_t particle_batch = 0;   ///< n_N; 0 means all N particles
    UpdateMode update = UpdateMode::Full;

    std::size_t epochs = 1;
    /// Time horizon T; when set it determines the number of epochs.
    std::optional<double> horizon;
    bool stop_on_window = false;
    std::size_t stop_window = 20;
    double stop_tol = 1e-8;

    ScheduleConfig schedule;
    /// Record every this many steps; 0 keeps only the first and last rows.
    std::size_t record_interval = 1;
    double success_tol = 0.25;
    std::uint64_t seed = 0;
};

struct SeriesRow
{
    std::uint64_t step = 0;
    double t = 0.0;
    double h = 0.0;
    double variance = 0.0;
    double best_value = 0.0;
    std::vector<double> consensus;

    friend bool operator==(const SeriesRow&, const SeriesRow&) = default;
};

struct RunReport
{
    std::vector<double> final_consensus;
    double best_value = HUGE_VAL;
    std::vector<SeriesRow> series;
    std::optional<bool> success;
    std::size_t epochs_completed = 0;
    std::size_t epochs_planned = 0;
    std::size_t steps_per_epoch = 0;
    std::uint64_t steps = 0;
    std::size_t final_particles = 0;
    bool diverged = false;
    std::optional<std::uint64_t> divergence_step;
    bool stopped_early = false;
    std::size_t kicks = 0;
    double wall_seconds = 0.0;
    /// Which consensus the stagnation test compares.
    std::string stagnation_reference = "partition";
};

inline std::shared_ptr<const Objective> resolve_objective(const RunConfig& c)
{
    if (c.objective) return c.objective;
    return std::make_shared<const Objective>(make_objective(c.objective_name, c.params.dim));
}

/// Term count M used by the data loop; objectives without sum structure
/// behave as a single term.
inline std::size_t term_count(const Objective& obj) { return obj.is_sum_structured() ? obj.term_count() : 1; }

struct LoopShape
{
    std::size_t terms = 1;            ///< M
    std::size_t data_batch = 1;       ///< n_E
    std::size_t particle_batch = 1;   ///< n_N
    std::size_t epochs = 0;

    std::size_t data_batches() const { return terms / data_batch; }
    std::size_t particle_sets(std::size_t n) const { return n / particle_batch; }
};

/// Checks the config against the objective and converts T into epochs.
inline LoopShape resolve_shape(const RunConfig& c, const Objective& obj)
{
    c.params.validate();
    if (obj.dimension() != c.params.dim) throw InvalidArgument("objective dimension differs from swarm dimension");
    LoopShape s;
    s.terms = term_count(obj);
    s.data_batch = c.data_batch == 0 ? s.terms : c.data_batch;
    s.particle_batch = c.particle_batch == 0 ? c.params.particles : c.particle_batch;
    if (s.data_batch > s.terms || s.terms % s.data_batch != 0) {
        throw InvalidArgument("data batch size " + std::to_string(s.data_batch) + " does not divide M = " +
                              std::to_string(s.terms));
    }
    if (s.data_batch < s.terms && !obj.is_sum_structured()) {
        throw InvalidArgument("data batching needs a sum-structured objective");
    }
    if (s.particle_batch > c.params.particles || c.params.particles % s.particle_batch != 0) {
        throw InvalidArgument("particle batch size " + std::to_string(s.particle_batch) + " does not divide N = " +
                              std::to_string(c.params.particles));
    }
    if (!(c.success_tol > 0.0)) throw InvalidArgument("success tolerance must be positive");
    if (c.schedule.decay_rate < 0.0 || c.schedule.decay_rate > 1.0) throw InvalidArgument("decay rate must lie in [0, 1]");
    if (c.schedule.min_particles < 1) throw InvalidArgument("minimum particle count must be at least 1");
    if (c.schedule.kick_magnitude < 0.0) throw InvalidArgument("kick magnitude must be non-negative");
    if (c.schedule.stagnation_tol && *c.schedule.stagnation_tol < 0.0) {
        throw InvalidArgument("stagnation threshold must be non-negative");
    }
    if (c.stop_on_window && (c.stop_window < 2 || !(c.stop_tol >= 0.0))) {
        throw InvalidArgument("stopping window needs at least 2 points and a non-negative tolerance");
    }

    if (c.horizon) {
        const double per_epoch = static_cast<double>(s.data_batches() * s.particle_sets(c.params.particles)) * c.params.dt;
        const double e = *c.horizon / per_epoch;
        if (!(e >= 0.0) || !std::isfinite(e)) throw InvalidArgument("time horizon must be non-negative");
        const double rounded = std::round(e);
        if (std::abs(e - rounded) > 1e-9 * std::max(1.0, e)) {
            throw InvalidArgument("time horizon is not a whole number of epochs");
        }
        s.epochs = static_cast<std::size_t>(rounded);
    } else {
        s.epochs = c.epochs;
    }
    return s;
}

namespace detail {

/// Consensus point of the given particles (all when `rows` is empty), judged by
/// `values`, from local bests in memory mode and positions otherwise.
inline std::vector<double> subset_consensus(const SwarmState& s, std::span<const std::size_t> rows,
                                            std::span<const double> values, double alpha)
{
    const ParticleArray& src = s.has_memory() ? s.y : s.x;
    if (rows.empty()) {
        return consensus_point(WeightedEnsemble{src.flat(), values, s.dim(), alpha});
    }
    std::vector<double> pts;
    pts.reserve(rows.size() * s.dim());
    for (std::size_t i : rows) {
        auto r = src.row(i);
        pts.insert(pts.end(), r.begin(), r.end());
    }
    return consensus_point(WeightedEnsemble{pts, values, s.dim(), alpha});
}

inline std::vector<double> full_values(const SwarmState& s, const Objective& obj)
{
    const ParticleArray& src = s.has_memory() ? s.y : s.x;
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = obj(src.row(i));
    return v;
}

inline SeriesRow make_row(const SwarmState& s, const SwarmParams& p, const Objective& obj, double alpha)
{
    SeriesRow row;
    row.step = s.step;
    row.t = s.time();
    row.h = s.has_memory() ? h_memory(s, p) : h_memoryless(s, p);
    row.variance = empirical_variance(s);
    const auto values = full_values(s, obj);
    row.best_value = *std::min_element(values.begin(), values.end());
    row.consensus = subset_consensus(s, {}, values, alpha);
    return row;
}

inline bool window_settled(const std::vector<SeriesRow>& series, std::size_t window, double tol)
{
    if (series.size() < window) return false;
    const auto& last = series.back().consensus;
    for (std::size_t j = series.size() - window; j < series.size(); ++j) {
        for (std::size_t k = 0; k < last.size(); ++k) {
            if (!(std::abs(series[j].consensus[k] - last[k]) < tol)) return false;
        }
    }
    return true;
}

/// Indices of the `keep` particles with the lowest values, in their original order.
inline std::vector<std::size_t> best_indices(std::span<const double> values, std::size_t keep)
{
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace detail

/// Executes the batched PSO loop nest: epochs, data batches, particle sets.
inline RunReport run(const RunConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto obj_ptr = resolve_objective(config);
    const Objective& obj = *obj_ptr;
    const LoopShape shape = resolve_shape(config, obj);
    const SwarmParams base = config.params.canonical();

    InitSpec init = config.init;
    init.seed = config.seed;
    SwarmState state = init_swarm(base, init, obj);

    ScheduleState sched;
    sched.alpha = base.alpha;
    sched.sigma1 = base.sigma1;
    sched.sigma2 = base.sigma2;
    sched.particles = base.particles;
    sched.cooling = config.schedule.cooling;
    sched.decay_rate = config.schedule.decay_rate;
    sched.min_particles = config.schedule.min_particles;
    sched.stagnation = config.schedule.stagnation;
    sched.stagnation_tol = config.schedule.stagnation_tol.value_or(1e-4 * std::sqrt(static_cast<double>(base.dim)));
    sched.kick_magnitude = config.schedule.kick_magnitude;
    sched.kick_target = config.schedule.kick_target;

    RunReport report;
    report.epochs_planned = shape.epochs;
    report.steps_per_epoch = shape.data_batches() * shape.particle_sets(base.particles);

    auto current_params = [&] {
        SwarmParams p = base;
        p.alpha = sched.alpha;
        p.sigma1 = sched.sigma1;
        p.sigma2 = sched.sigma2;
        p.particles = state.size();
        return p;
    };
    auto record = [&] {
        report.series.push_back(detail::make_row(state, current_params(), obj, sched.alpha));
        report.best_value = std::min(report.best_value, report.series.back().best_value);
    };

    record();
    const bool batching = shape.data_batch < shape.terms;
    bool stop = false;
    try {
        for (std::size_t epoch = 1; epoch <= shape.epochs && !stop; ++epoch) {
            const double var_start = empirical_variance(state);
            DataBatchPlan plan;
            if (batching) {
                plan = make_data_batches(shape.terms, shape.data_batch, config.seed, epoch);
            } else {
                plan.term_count = shape.terms;
                plan.batch_size = shape.terms;
                plan.batches.assign(1, {});
            }

            for (std::size_t b = 0; b < plan.batches.size() && !stop; ++b) {
                const std::vector<std::size_t>& terms = plan.batches[b];
                std::function<double(std::span<const double>)> eval;
                if (batching) {
                    eval = [&obj, &terms](std::span<const double> x) { return obj.batch(x, terms); };
                } else {
                    eval = [&obj](std::span<const double> x) { return obj(x); };
                }
                if (batching && state.has_memory() && state.step == 0) {
                    for (std::size_t i = 0; i < state.size(); ++i) state.best_values[i] = eval(state.y.row(i));
                }

                const std::size_t n = state.size();
                const std::size_t sets = shape.particle_sets(n);
                std::vector<std::size_t> order;
                if (sets == 1) {
                    order.resize(n);
                    std::iota(order.begin(), order.end(), std::size_t{0});
                } else {
                    order = random_permutation(n, derive_seed(config.seed, epoch, b), StreamTag::ParticlePartition, 0);
                }

                for (std::size_t set = 0; set < sets && !stop; ++set) {
                    std::span<const std::size_t> members(order.data() + set * shape.particle_batch, shape.particle_batch);
                    std::vector<double> values(members.size());
                    for (std::size_t j = 0; j < members.size(); ++j) {
                        values[j] = state.has_memory() ? state.best_values[members[j]] : eval(state.x.row(members[j]));
                    }
                    const auto c = detail::subset_consensus(state, sets == 1 ? std::span<const std::size_t>{} : members,
                                                            values, sched.alpha);
                    StepContext ctx;
                    ctx.consensus = c;
                    ctx.objective = eval;
                    if (config.update == UpdateMode::Partial && sets > 1) ctx.active = members;
                    const std::uint64_t k = state.step;
                    step(state, current_params(), ctx);

                    if (sched.stagnation) {
                        if (k == 0) {
                            sched.previous_consensus = c;
                        } else {
                            if (stagnation_kick(state, sched, c)) {
                                ++report.kicks;
                                for (std::size_t i = 0; i < state.size(); ++i) {
                                    if (detail::exploded(state.x.row(i)) || detail::exploded(state.v.row(i))) {
                                        throw DivergenceError(state.step);
                                    }
                                }
                            }
                        }
                    }
                    if (config.record_interval > 0 && state.step % config.record_interval == 0) {
                        record();
                        if (config.stop_on_window) {
                            stop = detail::window_settled(report.series, config.stop_window, config.stop_tol);
                        }
                    }
                }
            }
            report.epochs_completed = epoch;
            report.stopped_early = stop && epoch < shape.epochs;

            if (sched.decay_rate > 0.0) {
                const std::size_t n = state.size();
                std::size_t next = particle_decay(n, sched.decay_rate, var_start, empirical_variance(state),
                                                  sched.min_particles);
                const std::size_t nn = shape.particle_batch;
                next = std::min(n, (next + nn - 1) / nn * nn);
                if (next < n) {
                    const auto values = state.has_memory() ? state.best_values : detail::full_values(state, obj);
                    state.select_particles(detail::best_indices(values, next));
                }
                sched.particles = state.size();
            }
            sched = cooling_step(sched);
        }
    } catch (const DivergenceError& e) {
        report.diverged = true;
        report.divergence_step = e.step();
    }

    report.steps = state.step;
    report.final_particles = state.size();
    if (!report.diverged) {
        if (report.series.back().step != state.step) record();
        report.final_consensus = report.series.back().consensus;
        if (obj.minimizer()) {
            report.success = classify_success(report.final_consensus, *obj.minimizer(), config.success_tol);
        }
    } else if (obj.minimizer()) {
        report.success = false;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

struct PhaseCell
{
    double m = 0.0;
    double sigma2 = 0.0;
    std::size_t runs = 0;
    std::size_t successes = 0;
    std::size_t divergences = 0;

    double success_prob() const { return runs == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(runs); }
};

/// Success fractions over the (m, sigma2) grid, one row per cell in row-major
/// order (m outer). gamma = 1 - m and sigma1 = lambda1 sigma2 in every cell.
inline std::vector<PhaseCell> phase_diagram(const RunConfig& base, std::span<const double> m_grid,
                                            std::span<const double> sigma_grid, std::size_t runs_per_cell,
                                            std::size_t workers = 1)
{
    if (m_grid.empty() || sigma_grid.empty()) throw InvalidArgument("phase diagram grids must be nonempty");
    if (runs_per_cell < 1) throw InvalidArgument("runs per cell must be at least 1");
    const auto obj = resolve_objective(base);
    if (!obj->minimizer()) throw InvalidArgument("phase diagram needs an objective with a known minimizer");

    const std::size_t cells = m_grid.size() * sigma_grid.size();
    std::vector<char> success(cells * runs_per_cell, 0), diverged(cells * runs_per_cell, 0);

    auto cell_config = [&](std::size_t i, std::size_t j) {
        RunConfig c = base;
        c.objective = obj;
        c.params.m = m_grid[i];
        c.params.gamma = 1.0 - m_grid[i];
        c.params.sigma2 = sigma_grid[j];
        c.params.sigma1 = c.params.lambda1 * sigma_grid[j];
        c.record_interval = 0;
        return c;
    };
    // Surface configuration errors before spawning work.
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        for (std::size_t j = 0; j < sigma_grid.size(); ++j) resolve_shape(cell_config(i, j), *obj);
    }

    parallel_for(cells * runs_per_cell, workers, [&](std::size_t task) {
        const std::size_t cell = task / runs_per_cell;
        const std::size_t r = task % runs_per_cell;
        const std::size_t i = cell / sigma_grid.size();
        const std::size_t j = cell % sigma_grid.size();
        RunConfig c = cell_config(i, j);
        c.seed = derive_seed(base.seed, i, j, r);
        const RunReport rep = run(c);
        success[task] = rep.success.value_or(false) ? 1 : 0;
        diverged[task] = rep.diverged ? 1 : 0;
    });

    std::vector<PhaseCell> out(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        out[cell].m = m_grid[cell / sigma_grid.size()];
        out[cell].sigma2 = sigma_grid[cell % sigma_grid.size()];
        out[cell].runs = runs_per_cell;
        for (std::size_t r = 0; r < runs_per_cell; ++r) {
            out[cell].successes += success[cell * runs_per_cell + r];
            out[cell].divergences += diverged[cell * runs_per_cell + r];
        }
    }
    return out;
}

} // namespace pso

#endif // PSO_RUNNER_HPP
