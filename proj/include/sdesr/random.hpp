#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sdesr/tensor.hpp"

namespace sdesr {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded random stream. The same seed and the same call sequence produce
/// bit-identical draws. Normal variates use Box-Muller on explicit 53-bit
/// uniforms so the draw sequence does not depend on the standard library's
/// distribution implementations.
class RandomSource {
public:
    explicit RandomSource(uint64_t seed) : seed_(seed), engine_(seed) {}

    uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Integer in [0, n).
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Independent child stream; deterministic in (seed, index).
    RandomSource derive(uint64_t index) const {
        return RandomSource(splitmix64(seed_ ^ splitmix64(index + 0x1234567D)));
    }

    void fill_normal(Tensor& t, double scale = 1.0) {
        for (float& v : t.data) v = static_cast<float>(scale * normal());
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sdesr
