#pragma once

#include <cstdint>
#include <cmath>

#include "rlk/common.hpp"

namespace rlk {

// splitmix64; used both as the generator core and to derive independent
// per-scene / per-stage streams from one user seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic generator with a fixed algorithm so identical seeds produce
// identical streams on every platform/compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0xA0761D6478BD642Full) {
        // warm up so small seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_u64() %
                                     static_cast<std::uint64_t>(hi_inclusive - lo + 1));
    }

    // Box-Muller; one value per call, the pair partner is cached.
    double normal(double mu = 0.0, double sigma = 1.0) {
        if (has_cached_) {
            has_cached_ = false;
            return mu + sigma * cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * kPi * u2);
        has_cached_ = true;
        return mu + sigma * r * std::cos(2.0 * kPi * u2);
    }

    // Independent child stream (for per-scene / per-epoch determinism
    // regardless of evaluation order).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
        splitmix64(s);
        return splitmix64(s);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rlk
