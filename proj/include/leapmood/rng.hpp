#ifndef LEAPMOOD_RNG_HPP
#define LEAPMOOD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace leapmood {

/// Counter-style PRNG (splitmix64). State is just (seed, position), so
/// identical seed + call sequence gives identical output on every platform;
/// std:: distributions are implementation-defined and would break the
/// byte-reproducibility contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Independent stream derived from (seed, a, b). Used so parallel fitness
    /// evaluations and per-conversation dropout draws are schedule-independent.
    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        Rng r(seed);
        r.state_ = mix(mix(mix(seed) ^ a) ^ b);
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix_out(state_);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // modulo bias is < span / 2^64, irrelevant at the ranges used here
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Box-Muller, no caching: every call consumes exactly two uniforms.
    double normal(double mean, double stddev) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        return mix_out(x);
    }

    static std::uint64_t mix_out(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace leapmood

#endif
