#pragma once

#include <cmath>
#include <cstdint>

namespace pmx {

/// splitmix64 finalizer: the output function of the splitmix64 generator.
inline std::uint64_t splitmix64_mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-trial seed derivation. Trial streams are reproducible independently of
/// execution order: seed_t = splitmix64_mix(base + GOLDEN * (trial + 1)).
inline std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
    return splitmix64_mix(base_seed + 0x9E3779B97F4A7C15ULL * (trial_index + 1));
}

/// Counter-based 64-bit generator (splitmix64). State advances by a fixed
/// increment; the output is a bijective scramble of the counter, so streams
/// seeded far apart never correlate.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Standard normal stream via the Marsaglia polar method on top of SplitMix64.
/// Draw order is fully specified by the seed, so filled matrices are
/// bit-identical across runs and platforms with IEEE doubles.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * rng_.next_double() - 1.0;
            v = 2.0 * rng_.next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pmx
