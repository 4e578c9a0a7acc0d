#ifndef PSO_SWARM_HPP
#define PSO_SWARM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pso/errors.hpp"
#include "pso/objective.hpp"
#include "pso/rng.hpp"

namespace pso {

enum class Diffusion { Isotropic, Anisotropic };
enum class MemoryMode { Off, Soft, Hard };

inline std::string to_string(Diffusion d) { return d == Diffusion::Isotropic ? "isotropic" : "anisotropic"; }

inline std::string to_string(MemoryMode m)
{
    switch (m) {
    case MemoryMode::Off: return "off";
    case MemoryMode::Soft: return "soft";
    case MemoryMode::Hard: return "hard";
    }
    return "?";
}

/// Hyperparameters of the swarm dynamics.
struct SwarmParams
{
    double m = 0.2;                   ///< inertia
    std::optional<double> gamma;      ///< friction; 1 - m when unset
    double lambda1 = 0.0;             ///< drift towards the local best
    double lambda2 = 1.0;             ///< drift towards the consensus point
    double sigma1 = 0.0;              ///< local-best diffusion
    double sigma2 = 0.0;              ///< consensus diffusion
    double alpha = 100.0;             ///< weight exponent of the consensus point
    double beta = std::numeric_limits<double>::infinity();
    double theta = 0.0;
    double kappa = 50.0;
    double dt = 0.01;
    Diffusion diffusion = Diffusion::Anisotropic;
    MemoryMode memory = MemoryMode::Off;
    std::size_t particles = 100;
    std::size_t dim = 1;

    double friction() const noexcept { return gamma.value_or(1.0 - m); }
    bool has_memory() const noexcept { return memory != MemoryMode::Off; }

    /// Throws InvalidArgument naming the first violated constraint.
    void validate() const
    {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw InvalidArgument(std::string("invalid swarm parameters: ") + what);
        };
        require(m > 0.0, "m must be positive");
        require(friction() >= 0.0, "gamma must be non-negative");
        require(lambda1 >= 0.0 && lambda2 >= 0.0, "drift coefficients must be non-negative");
        require(sigma1 >= 0.0 && sigma2 >= 0.0, "diffusion coefficients must be non-negative");
        require(alpha > 0.0, "alpha must be positive");
        require(dt > 0.0, "dt must be positive");
        require(particles >= 1, "particle count must be at least 1");
        require(dim >= 1, "dimension must be at least 1");
        require(std::isfinite(m) && std::isfinite(friction()) && std::isfinite(lambda1) && std::isfinite(lambda2) &&
                    std::isfinite(sigma1) && std::isfinite(sigma2) && std::isfinite(alpha) && std::isfinite(dt),
                "parameters must be finite");
        if (memory == MemoryMode::Off) {
            require(lambda1 == 0.0 && sigma1 == 0.0, "memory off requires lambda1 = 0 and sigma1 = 0");
        }
        if (memory == MemoryMode::Soft) {
            require(kappa > 0.0, "kappa must be positive");
            require(theta >= 0.0, "theta must be non-negative");
            require(beta > 0.0, "beta must be positive");
        }
    }

    /// Hard mode ignores kappa, theta, beta and records the triple it stands for.
    SwarmParams canonical() const
    {
        SwarmParams p = *this;
        if (memory == MemoryMode::Hard) {
            p.kappa = 1.0 / (2.0 * dt);
            p.theta = 0.0;
            p.beta = std::numeric_limits<double>::infinity();
        }
        return p;
    }
};

/// Row-major N x d array of particle coordinates.
class ParticleArray
{
public:
    ParticleArray() = default;
    ParticleArray(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    double& operator()(std::size_t i, std::size_t k) noexcept { return data_[i * cols_ + k]; }
    double operator()(std::size_t i, std::size_t k) const noexcept { return data_[i * cols_ + k]; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    /// Keeps the listed rows, in the listed order.
    void select_rows(std::span<const std::size_t> keep)
    {
        std::vector<double> next;
        next.reserve(keep.size() * cols_);
        for (std::size_t i : keep) next.insert(next.end(), row(i).begin(), row(i).end());
        data_ = std::move(next);
        rows_ = keep.size();
    }

    friend bool operator==(const ParticleArray&, const ParticleArray&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Positions, velocities, local bests and bookkeeping of one swarm.
struct SwarmState
{
    ParticleArray x;
    ParticleArray v;
    ParticleArray y;                  ///< empty when memory is off
    std::vector<double> best_values;  ///< objective value recorded when y was last updated
    std::uint64_t step = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;           ///< the counter-based generator needs nothing else

    std::size_t size() const noexcept { return x.rows(); }
    std::size_t dim() const noexcept { return x.cols(); }
    bool has_memory() const noexcept { return !y.empty(); }
    double time() const noexcept { return static_cast<double>(step) * dt; }

    /// Drops all particles not listed in `keep` (particle decay).
    void select_particles(std::span<const std::size_t> keep)
    {
        x.select_rows(keep);
        v.select_rows(keep);
        if (has_memory()) {
            y.select_rows(keep);
            std::vector<double> vals;
            vals.reserve(keep.size());
            for (std::size_t i : keep) vals.push_back(best_values[i]);
            best_values = std::move(vals);
        }
    }

    friend bool operator==(const SwarmState&, const SwarmState&) = default;
};

/// Gaussian with diagonal covariance, or uniform on a box. Vectors of length
/// one are broadcast to every coordinate.
struct Distribution
{
    enum class Kind { Gaussian, Uniform };

    Kind kind = Kind::Gaussian;
    std::vector<double> mean{0.0};
    std::vector<double> variance{1.0};
    std::vector<double> lower{0.0};
    std::vector<double> upper{1.0};

    static Distribution gaussian(std::vector<double> mean, std::vector<double> variance)
    {
        return {Kind::Gaussian, std::move(mean), std::move(variance), {0.0}, {1.0}};
    }

    static Distribution uniform(std::vector<double> lower, std::vector<double> upper)
    {
        return {Kind::Uniform, {0.0}, {1.0}, std::move(lower), std::move(upper)};
    }
};

struct InitSpec
{
    Distribution position = Distribution::gaussian({2.0}, {4.0});
    Distribution velocity = Distribution::gaussian({0.0}, {1.0});
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> broadcast(const std::vector<double>& v, std::size_t d, const char* what)
{
    if (v.size() == d) return v;
    if (v.size() == 1) return std::vector<double>(d, v.front());
    throw InvalidArgument(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected 1 or " +
                          std::to_string(d));
}

inline void sample_rows(ParticleArray& out, const Distribution& dist, std::uint64_t seed, StreamTag tag,
                        const char* what)
{
    const std::size_t d = out.cols();
    if (dist.kind == Distribution::Kind::Gaussian) {
        const auto mean = broadcast(dist.mean, d, what);
        const auto var = broadcast(dist.variance, d, what);
        std::vector<double> sd(d);
        for (std::size_t k = 0; k < d; ++k) {
            if (!(var[k] >= 0.0)) throw InvalidArgument(std::string(what) + ": negative variance");
            sd[k] = std::sqrt(var[k]);
        }
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            gaussian_vector(seed, tag, i, 0, r);
            for (std::size_t k = 0; k < d; ++k) r[k] = mean[k] + sd[k] * r[k];
        }
    } else {
        const auto lo = broadcast(dist.lower, d, what);
        const auto hi = broadcast(dist.upper, d, what);
        for (std::size_t k = 0; k < d; ++k) {
            if (!(lo[k] <= hi[k])) throw InvalidArgument(std::string(what) + ": box bounds out of order");
        }
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            CounterStream(seed, tag, i, 0).uniforms(r);
            for (std::size_t k = 0; k < d; ++k) r[k] = lo[k] + (hi[k] - lo[k]) * r[k];
        }
    }
}

} // namespace detail

/// Draws X and V i.i.d. from the initial law and sets Y = X. With memory the
/// cached local-best values are E(X_0^i) under `obj`.
inline SwarmState init_swarm(const SwarmParams& params, const InitSpec& spec, const Objective& obj)
{
    params.validate();
    if (obj.dimension() != params.dim) {
        throw InvalidArgument("objective dimension " + std::to_string(obj.dimension()) +
                              " does not match swarm dimension " + std::to_string(params.dim));
    }
    SwarmState s;
    s.x = ParticleArray(params.particles, params.dim);
    s.v = ParticleArray(params.particles, params.dim);
    detail::sample_rows(s.x, spec.position, spec.seed, StreamTag::InitPosition, "initial position law");
    detail::sample_rows(s.v, spec.velocity, spec.seed, StreamTag::InitVelocity, "initial velocity law");
    if (params.has_memory()) {
        s.y = s.x;
        s.best_values.resize(params.particles);
        for (std::size_t i = 0; i < params.particles; ++i) s.best_values[i] = obj(s.y.row(i));
    }
    s.step = 0;
    s.dt = params.dt;
    s.seed = spec.seed;
    return s;
}

/// D(z) applied to `noise`: |z|_2 * noise (isotropic) or z .* noise (anisotropic).
inline void apply_diffusion(Diffusion type, std::span<const double> z, std::span<const double> noise,
                            std::span<double> out)
{
    if (z.size() != noise.size() || z.size() != out.size()) throw InvalidArgument("diffusion: dimension mismatch");
    if (type == Diffusion::Anisotropic) {
        for (std::size_t k = 0; k < z.size(); ++k) out[k] = z[k] * noise[k];
    } else {
        double nrm2 = 0.0;
        for (double zk : z) nrm2 += zk * zk;
        const double nrm = std::sqrt(nrm2);
        for (std::size_t k = 0; k < z.size(); ++k) out[k] = nrm * noise[k];
    }
}

inline std::vector<double> apply_diffusion(Diffusion type, std::span<const double> z, std::span<const double> noise)
{
    std::vector<double> out(z.size());
    apply_diffusion(type, z, noise, out);
    return out;
}

} // namespace pso

#endif // PSO_SWARM_HPP
