#ifndef PSO_DIAGNOSTICS_HPP
#define PSO_DIAGNOSTICS_HPP

// Convergence functionals, well-preparedness checks and success
// classification. Expectations over the mean-field law are replaced by
// particle averages throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pso/errors.hpp"
#include "pso/objective.hpp"
#include "pso/swarm.hpp"

namespace pso {

inline std::vector<double> particle_mean(const ParticleArray& a)
{
    std::vector<double> mean(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) mean[k] += r[k];
    }
    for (double& mk : mean) mk /= static_cast<double>(a.rows());
    return mean;
}

/// Mean over particles of |X^i - mean(X)|^2.
inline double empirical_variance(const ParticleArray& x)
{
    if (x.rows() == 0) throw InvalidArgument("empirical variance of an empty swarm");
    const auto mean = particle_mean(x);
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double dk = r[k] - mean[k];
            s += dk * dk;
        }
    }
    return s / static_cast<double>(x.rows());
}

inline double empirical_variance(const SwarmState& s) { return empirical_variance(s.x); }

/// Particle average of
///   (g/2m)^2 |X - xbar|^2 + |V|^2 + (g/2m) <X - xbar, V>.
inline double h_memoryless(const SwarmState& s, const SwarmParams& p)
{
    if (s.size() == 0) throw InvalidArgument("empty swarm");
    const double a = p.friction() / (2.0 * p.m);
    const auto mean = particle_mean(s.x);
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto x = s.x.row(i);
        auto v = s.v.row(i);
        double dx2 = 0.0, v2 = 0.0, dxv = 0.0;
        for (std::size_t k = 0; k < s.dim(); ++k) {
            const double dx = x[k] - mean[k];
            dx2 += dx * dx;
            v2 += v[k] * v[k];
            dxv += dx * v[k];
        }
        total += a * a * dx2 + v2 + a * dxv;
    }
    return total / static_cast<double>(s.size());
}

/// Particle average of
///   (g/2m)^2 |X - xbar|^2 + 3/2 |V|^2 + 1/2 (3 l1/m + g^2/m^2) |X - Y|^2
///   + (g/2m) <X - xbar, V> + (g/m) <X - Y, V>.
inline double h_memory(const SwarmState& s, const SwarmParams& p)
{
    if (!s.has_memory()) throw InvalidArgument("h_memory needs local bests");
    const double g = p.friction();
    const double a = g / (2.0 * p.m);
    const double c_xy = 0.5 * (3.0 * p.lambda1 / p.m + g * g / (p.m * p.m));
    const double c_xyv = g / p.m;
    const auto mean = particle_mean(s.x);
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto x = s.x.row(i);
        auto v = s.v.row(i);
        auto y = s.y.row(i);
        double dx2 = 0.0, v2 = 0.0, xy2 = 0.0, dxv = 0.0, xyv = 0.0;
        for (std::size_t k = 0; k < s.dim(); ++k) {
            const double dx = x[k] - mean[k];
            const double xy = x[k] - y[k];
            dx2 += dx * dx;
            v2 += v[k] * v[k];
            xy2 += xy * xy;
            dxv += dx * v[k];
            xyv += xy * v[k];
        }
        total += a * a * dx2 + 1.5 * v2 + c_xy * xy2 + a * dxv + c_xyv * xyv;
    }
    return total / static_cast<double>(s.size());
}

enum class CheckStatus { Pass, Fail, NotEvaluated };

inline std::string to_string(CheckStatus s)
{
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotEvaluated: return "not evaluated";
    }
    return "?";
}

struct Condition
{
    std::string name;
    CheckStatus status = CheckStatus::NotEvaluated;
    double value = std::numeric_limits<double>::quiet_NaN();  ///< the quantity that was tested
};

struct WellPreparednessReport
{
    double d0 = 0.0;        ///< D^X_0 (memoryless) or D^Y_0 (memory)
    double mu = 0.0;        ///< memoryless rate condition
    double mu1 = 0.0;       ///< memory rate conditions
    double mu2 = 0.0;
    double chi = 0.0;       ///< decay rate of the functional H; reported even if conditions fail
    std::vector<Condition> conditions;
    std::vector<std::pair<std::string, double>> recommended;
    std::optional<double> minimizer_distance_bound;

    bool all_evaluated_pass() const
    {
        return std::all_of(conditions.begin(), conditions.end(),
                           [](const Condition& c) { return c.status != CheckStatus::Fail; });
    }

    const Condition* find(const std::string& name) const
    {
        for (const auto& c : conditions) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

/// Initial swarm for the initial-datum conditions; needs an objective with an
/// analytic gradient and Hessian bound, otherwise the conditions are skipped.
struct InitialDatum
{
    const SwarmState* state = nullptr;
    const Objective* objective = nullptr;
};

/// Inverse-continuity constants (|x - x*| <= (E(x) - Emin)^nu / eta) and the
/// target accuracy in objective value.
struct InverseContinuity
{
    double eta = 1.0;
    double nu = 0.5;
    double accuracy = 0.0;
};

/// Parameter bounds that make the decay prefactor negative, for a given D:
/// lambda > 4 D sigma^2 / gamma, then m < gamma^2 / (8 D lambda).
struct MemorylessBounds
{
    double lambda_min;
    double m_max;
};

inline MemorylessBounds memoryless_parameter_bounds(double d, double sigma, double gamma, double lambda)
{
    return {4.0 * d * sigma * sigma / gamma, gamma * gamma / (8.0 * d * lambda)};
}

/// The four bounds of the memory case for a given D.
struct MemoryBounds
{
    double lambda1_min;
    double lambda2_min;
    double kappa_min;
    double m_max;
};

inline MemoryBounds memory_parameter_bounds(double d, const SwarmParams& p)
{
    const double g = p.friction();
    const double l1 = p.lambda1, l2 = p.lambda2;
    MemoryBounds b{};
    b.lambda1_min = 3.0 * p.sigma1 * p.sigma1 / (2.0 * g);
    b.lambda2_min = 6.0 * std::max(d * l1 / 4.0, (1.0 + d) * p.sigma2 * p.sigma2 / g);
    b.kappa_min = 3.0 * l2 * l2 * (1.0 + d) / (g * p.theta * l1);
    b.m_max = std::min(g * p.theta / (16.0 * p.kappa), l1 * g * g / (18.0 * d * l2 * l2));
    return b;
}

namespace detail {

/// log of mean_i exp(-alpha (v_i - reference)), evaluated stably.
inline double log_mean_weight(std::span<const double> values, double alpha, double reference)
{
    if (values.empty()) throw InvalidArgument("no initial values");
    const double vmin = *std::min_element(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += std::exp(-alpha * (v - vmin));
    return -alpha * (vmin - reference) + std::log(s / static_cast<double>(values.size()));
}

inline Condition flag(std::string name, bool ok, double value)
{
    return {std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, value};
}

/// lambda2^2 / lambda1 with 0/0 read as 0.
inline double ratio_sq(double num, double den)
{
    if (num == 0.0) return 0.0;
    return den == 0.0 ? HUGE_VAL : num * num / den;
}

/// Weighted mean of <grad E(X_i), V_i> with weights exp(-alpha E(X_i)).
inline double weighted_gradient_velocity(const SwarmState& s, const Objective& obj, std::span<const double> values,
                                         double alpha)
{
    const double vmin = *std::min_element(values.begin(), values.end());
    std::vector<double> grad(s.dim());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        obj.gradient(s.x.row(i), grad);
        double dot = 0.0;
        for (std::size_t k = 0; k < s.dim(); ++k) dot += grad[k] * s.v(i, k);
        const double w = std::exp(-alpha * (values[i] - vmin));
        num += w * dot;
        den += w;
    }
    return num / den;
}

inline double mean_squared_gradient(const SwarmState& s, const Objective& obj)
{
    std::vector<double> grad(s.dim());
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        obj.gradient(s.x.row(i), grad);
        for (double g : grad) total += g * g;
    }
    return total / static_cast<double>(s.size());
}

inline bool datum_usable(const InitialDatum& datum)
{
    return datum.state && datum.objective && datum.objective->has_gradient() && datum.objective->hessian_bound();
}

inline void add_distance_bound(WellPreparednessReport& r, const std::optional<InverseContinuity>& icp)
{
    if (icp && icp->eta > 0.0 && icp->nu > 0.0 && icp->accuracy >= 0.0) {
        r.minimizer_distance_bound = std::pow(icp->accuracy, icp->nu) / icp->eta;
    }
}

} // namespace detail

/// Rate condition, parameter bounds and (when a gradient oracle is available)
/// the initial-datum condition for the memoryless dynamics. lambda and sigma
/// are lambda2 and sigma2 of `params`.
inline WellPreparednessReport check_well_prepared_memoryless(const SwarmParams& params,
                                                             std::span<const double> initial_values, double min_value,
                                                             const InitialDatum& datum = {},
                                                             const std::optional<InverseContinuity>& icp = {})
{
    const double m = params.m;
    const double g = params.friction();
    const double lambda = params.lambda2;
    const double sigma = params.sigma2;
    const double alpha = params.alpha;

    WellPreparednessReport r;
    const double log_mean = detail::log_mean_weight(initial_values, alpha, min_value);
    r.d0 = 2.0 * std::exp(-log_mean);
    r.mu = lambda * g / (2.0 * m * m) - (2.0 * lambda * lambda / (g * m) + sigma * sigma / (m * m)) * 2.0 * r.d0;
    const double a = g / (2.0 * m);
    r.chi = (2.0 / 3.0) * std::min(g / m, r.mu) / (a * a + 1.0);

    r.conditions.push_back(detail::flag("P1: mu > 0", r.mu > 0.0, r.mu));
    const auto bounds = memoryless_parameter_bounds(2.0 * r.d0, sigma, g, lambda);
    r.conditions.push_back(detail::flag("lambda > 4 (2 D0) sigma^2 / gamma", lambda > bounds.lambda_min, lambda));
    r.conditions.push_back(detail::flag("m < gamma^2 / (8 (2 D0) lambda)", m < bounds.m_max, m));
    r.recommended = {{"lambda_min", bounds.lambda_min}, {"m_max", bounds.m_max}};

    if (detail::datum_usable(datum) && datum.state->size() == initial_values.size()) {
        const auto& s = *datum.state;
        const double c_e = *datum.objective->hessian_bound();
        const double gv = detail::weighted_gradient_velocity(s, *datum.objective, initial_values, alpha);
        const double h0 = h_memoryless(s, params);
        const double lhs = (m * alpha / (2.0 * g)) * std::max(gv, 0.0) +
                           alpha * c_e / (r.chi * (g / m - r.chi)) * (1.0 + 8.0 * m * lambda / (g * g)) * h0 *
                               std::exp(-2.0 * log_mean);
        const bool ok = r.chi > 0.0 && r.chi < g / m && lhs < 3.0 / 16.0;
        r.conditions.push_back(detail::flag("P2: initial datum < 3/16", ok, lhs));
    } else {
        r.conditions.push_back({"P2: initial datum < 3/16", CheckStatus::NotEvaluated});
    }
    detail::add_distance_bound(r, icp);
    return r;
}

/// Rate conditions mu1, mu2, the four parameter bounds and (with a gradient
/// oracle) the initial-datum condition for the dynamics with memory.
/// Hard memory is checked with its canonical (kappa, theta, beta).
inline WellPreparednessReport check_well_prepared_memory(const SwarmParams& raw,
                                                         std::span<const double> initial_best_values,
                                                         double min_value, const InitialDatum& datum = {},
                                                         const std::optional<InverseContinuity>& icp = {})
{
    const SwarmParams p = raw.canonical();
    const double m = p.m;
    const double g = p.friction();
    const double l1 = p.lambda1, l2 = p.lambda2;
    const double s1 = p.sigma1, s2 = p.sigma2;
    const double kappa = p.kappa, theta = p.theta, alpha = p.alpha;

    WellPreparednessReport r;
    const double log_mean = detail::log_mean_weight(initial_best_values, alpha, min_value);
    r.d0 = 12.0 * std::exp(-log_mean);

    const double noise_drift = 9.0 * l2 * l2 / (g * m) + 3.0 * s2 * s2 / (m * m);
    const double local = 3.0 * l1 * g / (4.0 * m * m);
    r.mu1 = (l1 + 2.0 * l2) * g / (4.0 * m * m) - (noise_drift + local) * r.d0;
    r.mu2 = (l1 + l2) * g / (m * m) + kappa * theta * (3.0 * l1 / m + g * g / (m * m)) - 8.0 * kappa * kappa * g / m -
            detail::ratio_sq(l2, l1) * g / (2.0 * m * m) - 3.0 * s1 * s1 / (2.0 * m * m) - noise_drift -
            (noise_drift + local) * 2.0 * r.d0;
    const double a = g / (2.0 * m);
    const double equiv = a * a + 1.0 + 3.0 * l1 / m + 2.0 * (g / m) * (g / m);
    r.chi = 0.4 * std::min({g / (2.0 * m), r.mu1, r.mu2}) / equiv;

    r.conditions.push_back(detail::flag("P1: mu1 > 0", r.mu1 > 0.0, r.mu1));
    r.conditions.push_back(detail::flag("P2: mu2 > 0", r.mu2 > 0.0, r.mu2));
    const auto b = memory_parameter_bounds(2.0 * r.d0, p);
    r.conditions.push_back(detail::flag("lambda1 > 3 sigma1^2 / (2 gamma)", l1 > b.lambda1_min, l1));
    r.conditions.push_back(detail::flag("lambda2 > 6 max{D lambda1/4, (1+D) sigma2^2/gamma}", l2 > b.lambda2_min, l2));
    r.conditions.push_back(detail::flag("kappa > 3 lambda2^2 (1+D) / (gamma theta lambda1)", kappa > b.kappa_min, kappa));
    r.conditions.push_back(detail::flag("m < min{gamma theta/(16 kappa), lambda1 gamma^2/(18 D lambda2^2)}", m < b.m_max, m));
    r.recommended = {{"lambda1_min", b.lambda1_min},
                     {"lambda2_min", b.lambda2_min},
                     {"kappa_min", b.kappa_min},
                     {"m_max", b.m_max}};

    if (detail::datum_usable(datum) && datum.state->has_memory() &&
        datum.state->size() == initial_best_values.size()) {
        const auto& s = *datum.state;
        const double c_e = *datum.objective->hessian_bound();
        const double h0 = h_memory(s, p);
        const double grad2 = detail::mean_squared_gradient(s, *datum.objective);
        const double inv_weight = std::exp(-log_mean);
        const double chi = r.chi;
        const double lhs =
            (alpha * kappa * m / (l1 * chi) * (c_e + 2.0 * alpha * alpha) + 24.0 * c_e * c_e * kappa / (alpha * chi * chi * chi)) *
                h0 * inv_weight +
            6.0 * kappa / (alpha * chi) * grad2 * inv_weight;
        const bool ok = chi > 0.0 && lhs < 3.0 / 32.0;
        r.conditions.push_back(detail::flag("P3: initial datum < 3/32", ok, lhs));
    } else {
        r.conditions.push_back({"P3: initial datum < 3/32", CheckStatus::NotEvaluated});
    }
    detail::add_distance_bound(r, icp);
    return r;
}

/// Success iff |consensus - minimizer|_inf < tol.
inline bool classify_success(std::span<const double> consensus, std::span<const double> minimizer, double tol)
{
    if (consensus.size() != minimizer.size()) throw InvalidArgument("classify_success: dimension mismatch");
    double dist = 0.0;
    for (std::size_t k = 0; k < consensus.size(); ++k) {
        const double dk = std::abs(consensus[k] - minimizer[k]);
        if (!(dk < tol)) return false;  // NaN fails too
        dist = std::max(dist, dk);
    }
    return dist < tol;
}

/// A diverged run is a failure regardless of where it stopped.
inline bool classify_success(bool diverged, std::span<const double> consensus, std::span<const double> minimizer,
                             double tol)
{
    return !diverged && classify_success(consensus, minimizer, tol);
}

} // namespace pso

#endif // PSO_DIAGNOSTICS_HPP
