#pragma once

// Deterministic PRNG with a stable cross-platform output sequence.
// std::mt19937 paired with std:: distributions is not used because the
// distribution algorithms are implementation-defined; this generator plus
// the explicit uniform/normal transforms below pin the exact bit stream.

#include <cmath>
#include <cstdint>

#include "tacflow/common.hpp"

namespace tacflow {

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    Rng(uint64_t seed, uint64_t stream) { reseed(seed ^ (SplitMix64(stream + 0x51ed2701a3c9b4e7ULL).next())); }

    void reseed(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : s_) s = sm.next();
        have_cached_normal_ = false;
    }

    // xoshiro256++
    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, bound)
    uint64_t uniform_index(uint64_t bound) {
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // standard normal via Box-Muller, one pair per two calls
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * kPi * u2;
        cached_normal_ = mag * std::sin(ang);
        have_cached_normal_ = true;
        return mag * std::cos(ang);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4] = {};
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

} // namespace tacflow
