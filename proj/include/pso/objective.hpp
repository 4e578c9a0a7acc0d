#ifndef PSO_OBJECTIVE_HPP
#define PSO_OBJECTIVE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pso/errors.hpp"
#include "pso/rng.hpp"

namespace pso {

/// Objective E : R^d -> R, optionally of the form E(x) = (1/M) sum_j E_j(x)
/// so that it can be restricted to mini-batches of terms.
///
/// Instances are immutable after construction and may be evaluated
/// concurrently.
class Objective
{
public:
    using Evaluator = std::function<double(std::span<const double>)>;
    using TermEvaluator = std::function<double(std::size_t, std::span<const double>)>;
    using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

    /// Objective without sum structure.
    static Objective plain(std::size_t dim, Evaluator f, std::string name = "custom")
    {
        if (dim == 0) throw InvalidArgument("objective dimension must be positive");
        if (!f) throw InvalidArgument("objective evaluator is empty");
        Objective obj;
        obj.dim_ = dim;
        obj.full_ = std::move(f);
        obj.name_ = std::move(name);
        return obj;
    }

    /// Sum-structured objective. Without an explicit `full` evaluator the full
    /// value is the mean of all term values, summed in index order.
    static Objective sum_of_terms(std::size_t dim, std::size_t terms, TermEvaluator term,
                                  Evaluator full = {}, std::string name = "custom")
    {
        if (dim == 0) throw InvalidArgument("objective dimension must be positive");
        if (terms == 0) throw InvalidArgument("term count must be positive");
        if (!term) throw InvalidArgument("term evaluator is empty");
        Objective obj;
        obj.dim_ = dim;
        obj.terms_ = terms;
        obj.term_ = std::move(term);
        if (full) {
            obj.full_ = std::move(full);
        } else {
            obj.full_ = [t = obj.term_, terms](std::span<const double> x) {
                double s = 0.0;
                for (std::size_t j = 0; j < terms; ++j) s += t(j, x);
                return s / static_cast<double>(terms);
            };
        }
        obj.name_ = std::move(name);
        return obj;
    }

    Objective& with_minimizer(std::vector<double> x, double value)
    {
        if (x.size() != dim_) throw InvalidArgument("minimizer has wrong dimension");
        minimizer_ = std::move(x);
        min_value_ = value;
        return *this;
    }

    /// Analytic gradient plus a bound on the spectral norm of the Hessian;
    /// only the diagnostics that check initial-datum conditions use these.
    Objective& with_gradient(Gradient g, double hessian_bound)
    {
        gradient_ = std::move(g);
        hessian_bound_ = hessian_bound;
        return *this;
    }

    std::size_t dimension() const noexcept { return dim_; }
    std::size_t term_count() const noexcept { return terms_; }
    bool is_sum_structured() const noexcept { return terms_ > 0; }
    const std::string& name() const noexcept { return name_; }

    const std::optional<std::vector<double>>& minimizer() const noexcept { return minimizer_; }
    std::optional<double> min_value() const noexcept { return min_value_; }
    bool has_gradient() const noexcept { return static_cast<bool>(gradient_); }
    std::optional<double> hessian_bound() const noexcept { return hessian_bound_; }

    double operator()(std::span<const double> x) const
    {
        check_dim(x.size());
        return full_(x);
    }

    double term(std::size_t j, std::span<const double> x) const
    {
        if (!is_sum_structured()) throw UnsupportedOperation("objective '" + name_ + "' has no term structure");
        if (j >= terms_) throw InvalidArgument("term index out of range");
        check_dim(x.size());
        return term_(j, x);
    }

    /// (1/|batch|) sum_{j in batch} E_j(x), indices zero-based.
    double batch(std::span<const double> x, std::span<const std::size_t> indices) const
    {
        if (!is_sum_structured()) throw UnsupportedOperation("objective '" + name_ + "' has no term structure");
        if (indices.empty()) throw InvalidArgument("empty batch");
        check_dim(x.size());
        double s = 0.0;
        for (std::size_t j : indices) {
            if (j >= terms_) throw InvalidArgument("batch index out of range");
            s += term_(j, x);
        }
        return s / static_cast<double>(indices.size());
    }

    void gradient(std::span<const double> x, std::span<double> out) const
    {
        if (!gradient_) throw UnsupportedOperation("objective '" + name_ + "' has no gradient");
        check_dim(x.size());
        if (out.size() != dim_) throw InvalidArgument("gradient output has wrong dimension");
        gradient_(x, out);
    }

private:
    Objective() = default;

    void check_dim(std::size_t n) const
    {
        if (n != dim_) {
            throw InvalidArgument("point has dimension " + std::to_string(n) + ", objective expects " +
                                  std::to_string(dim_));
        }
    }

    std::size_t dim_ = 0;
    std::size_t terms_ = 0;
    Evaluator full_;
    TermEvaluator term_;
    Gradient gradient_;
    std::optional<std::vector<double>> minimizer_;
    std::optional<double> min_value_;
    std::optional<double> hessian_bound_;
    std::string name_;
};

inline double eval_full(const Objective& obj, std::span<const double> x) { return obj(x); }

inline double eval_batch(const Objective& obj, std::span<const double> x, std::span<const std::size_t> batch)
{
    return obj.batch(x, batch);
}

namespace detail {

inline double rastrigin_coordinate(double v) noexcept
{
    return v * v + 2.5 * (1.0 - std::cos(2.0 * std::numbers::pi * v));
}

} // namespace detail

/// E(v) = sum_k v_k^2 + (5/2)(1 - cos(2 pi v_k)); global minimum 0 at the origin.
///
/// Exposed as a sum over the d coordinates (E_j = d * per-coordinate term) so
/// the mini-batch machinery can be exercised on a benchmark.
inline Objective make_rastrigin(std::size_t d)
{
    if (d == 0) throw InvalidArgument("rastrigin dimension must be positive");
    const double scale = static_cast<double>(d);
    auto obj = Objective::sum_of_terms(
        d, d,
        [scale](std::size_t j, std::span<const double> x) { return scale * detail::rastrigin_coordinate(x[j]); },
        [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += detail::rastrigin_coordinate(v);
            return s;
        },
        "rastrigin");
    obj.with_minimizer(std::vector<double>(d, 0.0), 0.0);
    obj.with_gradient(
        [](std::span<const double> x, std::span<double> g) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                g[k] = 2.0 * x[k] + 5.0 * std::numbers::pi * std::sin(2.0 * std::numbers::pi * x[k]);
            }
        },
        2.0 + 10.0 * std::numbers::pi * std::numbers::pi);
    return obj;
}

/// E(x) = |x|^2, split over coordinates like make_rastrigin.
inline Objective make_sphere(std::size_t d)
{
    if (d == 0) throw InvalidArgument("sphere dimension must be positive");
    const double scale = static_cast<double>(d);
    auto obj = Objective::sum_of_terms(
        d, d, [scale](std::size_t j, std::span<const double> x) { return scale * x[j] * x[j]; },
        [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        },
        "sphere");
    obj.with_minimizer(std::vector<double>(d, 0.0), 0.0);
    obj.with_gradient(
        [](std::span<const double> x, std::span<double> g) {
            for (std::size_t k = 0; k < x.size(); ++k) g[k] = 2.0 * x[k];
        },
        2.0);
    return obj;
}

/// Benchmark lookup by name ("rastrigin", "sphere").
inline Objective make_objective(const std::string& name, std::size_t d)
{
    if (name == "rastrigin") return make_rastrigin(d);
    if (name == "sphere") return make_sphere(d);
    throw InvalidArgument("unknown objective '" + name + "'");
}

/// Random partition of the M term indices into M/n_E disjoint batches.
struct DataBatchPlan
{
    std::size_t term_count = 0;
    std::size_t batch_size = 0;
    std::vector<std::vector<std::size_t>> batches;
};

/// Uniform random permutation of {0..M-1} chopped into consecutive blocks of
/// size n_E. `index` selects the draw (the runner passes the epoch).
inline DataBatchPlan make_data_batches(std::size_t term_count, std::size_t batch_size, std::uint64_t seed,
                                       std::uint64_t index = 0)
{
    if (term_count == 0 || batch_size == 0) throw InvalidArgument("term count and batch size must be positive");
    if (term_count % batch_size != 0) {
        throw InvalidArgument("batch size " + std::to_string(batch_size) + " does not divide term count " +
                              std::to_string(term_count));
    }
    DataBatchPlan plan{term_count, batch_size, {}};
    const auto perm = random_permutation(term_count, seed, StreamTag::DataPartition, index);
    plan.batches.reserve(term_count / batch_size);
    for (std::size_t start = 0; start < term_count; start += batch_size) {
        plan.batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                  perm.begin() + static_cast<std::ptrdiff_t>(start + batch_size));
    }
    return plan;
}

} // namespace pso

#endif // PSO_OBJECTIVE_HPP
