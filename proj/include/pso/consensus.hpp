#ifndef PSO_CONSENSUS_HPP
#define PSO_CONSENSUS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pso/errors.hpp"

namespace pso {

/// Points (n x d, row-major) with their objective values and the weight
/// exponent alpha. Non-owning.
struct WeightedEnsemble
{
    std::span<const double> points;
    std::span<const double> values;
    std::size_t dim = 0;
    double alpha = 1.0;
};

namespace detail {

inline double checked_min(std::span<const double> values)
{
    if (values.empty()) throw InvalidArgument("empty ensemble");
    double vmin = values.front();
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument("ensemble contains a non-finite value");
        vmin = std::min(vmin, v);
    }
    return vmin;
}

} // namespace detail

/// Weighted mean of the points with weights exp(-alpha (v_i - v_min)).
///
/// Subtracting the ensemble minimum makes the largest weight exactly one, so
/// the sum never overflows and never underflows to zero. Summation runs in
/// index order.
inline void consensus_point(const WeightedEnsemble& ens, std::span<double> out)
{
    const std::size_t n = ens.values.size();
    const std::size_t d = ens.dim;
    if (n == 0) throw InvalidArgument("empty ensemble");
    if (d == 0 || ens.points.size() != n * d) throw InvalidArgument("ensemble points do not match n x d");
    if (out.size() != d) throw InvalidArgument("consensus output has wrong dimension");
    if (!(ens.alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    const double vmin = detail::checked_min(ens.values);

    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> lo(d, HUGE_VAL), hi(d, -HUGE_VAL);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(-ens.alpha * (ens.values[i] - vmin));
        if (w == 0.0) continue;
        total += w;
        const double* p = ens.points.data() + i * d;
        for (std::size_t k = 0; k < d; ++k) {
            out[k] += w * p[k];
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    // Rounding may push the quotient one ulp outside the hull of the
    // contributing points; clamp it back.
    for (std::size_t k = 0; k < d; ++k) out[k] = std::clamp(out[k] / total, lo[k], hi[k]);
}

inline std::vector<double> consensus_point(const WeightedEnsemble& ens)
{
    std::vector<double> out(ens.dim);
    consensus_point(ens, out);
    return out;
}

/// -(1/alpha) log((1/n) sum_i exp(-alpha v_i)), evaluated around the minimum.
/// The result lies in [v_min, v_min + log(n)/alpha].
inline double laplace_estimate(std::span<const double> values, double alpha)
{
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    const double vmin = detail::checked_min(values);
    double s = 0.0;
    for (double v : values) s += std::exp(-alpha * (v - vmin));
    // s >= 1 (the minimiser contributes exactly 1) and s <= n.
    const double n = static_cast<double>(values.size());
    return vmin + (std::log(n) - std::log(s)) / alpha;
}

} // namespace pso

#endif // PSO_CONSENSUS_HPP
