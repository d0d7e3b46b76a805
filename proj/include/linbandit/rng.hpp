#pragma once

#include <cmath>
#include <cstdint>

namespace linbandit {

// Deterministic, portable random number generation. The simulator's
// reproducibility contract (identical seeds -> byte-identical traces,
// independent of platform std::lib and thread schedule) rules out
// std::normal_distribution, whose output is implementation-defined.
// Algorithms: splitmix64 for seeding/mixing, xoshiro256++ for the stream,
// Box-Muller for Gaussians. All are documented in the README.

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// Deterministic derivation of sub-stream seeds: two splitmix64 steps over
/// the base seed xor a Weyl-spread index. Never time-based.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    SplitMix64 sm{base ^ (0x9E3779B97F4A7C15ULL * (index + 1))};
    sm.next();
    return sm.next();
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0, 1]; strictly positive so log() below is finite.
    double uniform_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

/// Standard normal stream via Box-Muller with the sine half cached.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(gen_.uniform_pos()));
        const double phi = 2.0 * M_PI * gen_.uniform01();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    double uniform01() { return gen_.uniform01(); }

private:
    Xoshiro256pp gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace linbandit
