#ifndef PSO_RNG_HPP
#define PSO_RNG_HPP

// Counter-based random numbers.
//
// Every Gaussian draw in the library is a pure function of
// (seed, stream tag, particle index, step counter, coordinate), so a
// trajectory does not depend on how work is split across threads or on the
// order in which particles are advanced.

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace pso {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3", SC'11).
class Philox4x32
{
public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr counter_type apply(counter_type ctr, key_type key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
};

/// Logical streams. Distinct tags never share a counter.
enum class StreamTag : std::uint8_t {
    InitPosition = 1,
    InitVelocity = 2,
    LocalBestNoise = 3,   // B^1 in the memory dynamics
    ConsensusNoise = 4,   // B^2, and the only noise of the memoryless dynamics
    StagnationKick = 5,
    DataPartition = 6,
    ParticlePartition = 7,
};

/// SplitMix64 finalizer; used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Deterministic child seed for a tuple of indices (e.g. phase-diagram cell
/// and repetition). Order of the indices matters; nothing else does.
template <class... Ints>
constexpr std::uint64_t derive_seed(std::uint64_t base, Ints... idx) noexcept
{
    std::uint64_t s = mix64(base);
    ((s = mix64(s ^ mix64(static_cast<std::uint64_t>(idx) + 0x632BE59BD9B4E019ull))), ...);
    return s;
}

/// Uniform in [0, 1) with 53 random bits.
inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) noexcept
{
    const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (std::uint64_t{lo} >> 11);
    return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

/// One addressable stream: (seed, tag, particle, step). Block j of the stream
/// yields four 32-bit words, i.e. two doubles / two Gaussians.
class CounterStream
{
public:
    CounterStream(std::uint64_t seed, StreamTag tag, std::uint64_t particle, std::uint64_t step) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          particle_(static_cast<std::uint32_t>(particle)),
          step_lo_(static_cast<std::uint32_t>(step)),
          high_((static_cast<std::uint32_t>(tag) << 24) |
                ((static_cast<std::uint32_t>(particle >> 32) & 0xFFu) << 16) |
                (static_cast<std::uint32_t>(step >> 32) & 0xFFFFu))
    {
    }

    Philox4x32::counter_type block(std::uint32_t j) const noexcept
    {
        return Philox4x32::apply({j, particle_, step_lo_, high_}, key_);
    }

    /// Fills `out` with i.i.d. standard normals (Box-Muller on consecutive blocks).
    void gaussians(std::span<double> out) const noexcept
    {
        const std::size_t n = out.size();
        for (std::size_t k = 0, j = 0; k < n; k += 2, ++j) {
            const auto w = block(static_cast<std::uint32_t>(j));
            // u1 in (0, 1] keeps the logarithm finite.
            const double u1 = 1.0 - to_unit_interval(w[0], w[1]);
            const double u2 = to_unit_interval(w[2], w[3]);
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double phi = 2.0 * std::numbers::pi * u2;
            out[k] = r * std::cos(phi);
            if (k + 1 < n) out[k + 1] = r * std::sin(phi);
        }
    }

    /// Fills `out` with uniforms in [0, 1).
    void uniforms(std::span<double> out) const noexcept
    {
        const std::size_t n = out.size();
        for (std::size_t k = 0, j = 0; k < n; k += 2, ++j) {
            const auto w = block(static_cast<std::uint32_t>(j));
            out[k] = to_unit_interval(w[0], w[1]);
            if (k + 1 < n) out[k + 1] = to_unit_interval(w[2], w[3]);
        }
    }

private:
    Philox4x32::key_type key_;
    std::uint32_t particle_;
    std::uint32_t step_lo_;
    std::uint32_t high_;
};

inline void gaussian_vector(std::uint64_t seed, StreamTag tag, std::uint64_t particle,
                            std::uint64_t step, std::span<double> out) noexcept
{
    CounterStream(seed, tag, particle, step).gaussians(out);
}

/// High 64 bits of the 128-bit product a * b.
constexpr std::uint64_t mulhi64(std::uint64_t a, std::uint64_t b) noexcept
{
    const std::uint64_t a_lo = a & 0xFFFFFFFFu, a_hi = a >> 32;
    const std::uint64_t b_lo = b & 0xFFFFFFFFu, b_hi = b >> 32;
    const std::uint64_t lo_lo = a_lo * b_lo;
    const std::uint64_t hi_lo = a_hi * b_lo;
    const std::uint64_t lo_hi = a_lo * b_hi;
    const std::uint64_t cross = (lo_lo >> 32) + (hi_lo & 0xFFFFFFFFu) + lo_hi;
    return a_hi * b_hi + (hi_lo >> 32) + (cross >> 32);
}

/// Uniformly random permutation of {0, ..., n-1}; Fisher-Yates driven by a
/// counter stream so the result is identical across standard libraries.
inline std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed, StreamTag tag,
                                                   std::uint64_t index)
{
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    if (n < 2) return perm;
    const CounterStream stream(seed, tag, 0, index);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto w = stream.block(static_cast<std::uint32_t>(i));
        const std::uint64_t r = (std::uint64_t{w[0]} << 32) | w[1];
        // Multiply-shift bounded draw; bias is below 2^-64 * n.
        const auto j = static_cast<std::size_t>(mulhi64(r, i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

/// Order-independent tally of consumed Gaussian increments. Two systems that
/// draw the same increments for the same (particle, step) pairs end with equal
/// tallies.
struct NoiseTally
{
    std::uint64_t checksum = 0;
    std::uint64_t count = 0;

    void add(std::uint64_t particle, std::uint64_t step, std::span<const double> draws) noexcept
    {
        std::uint64_t h = mix64(particle ^ mix64(step));
        for (double x : draws) {
            h = mix64(h ^ std::bit_cast<std::uint64_t>(x));
        }
        checksum += h;
        count += draws.size();
    }

    friend bool operator==(const NoiseTally&, const NoiseTally&) = default;
};

} // namespace pso

#endif // PSO_RNG_HPP
