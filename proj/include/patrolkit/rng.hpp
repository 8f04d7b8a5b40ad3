#pragma once

#include <cstdint>
#include <random>

namespace patrolkit {

// Deterministic RNG used everywhere randomness is needed. Wraps the
// standard mt19937_64 engine (whose output sequence is fixed by the
// standard) and does its own uniform extraction so that results are
// reproducible across platforms and standard-library implementations.
class SimRng {
public:
    explicit SimRng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + uniform() * (hi - lo);
    }

    // Unbiased integer in [0, n). n must be > 0.
    uint64_t uniform_int(uint64_t n) {
        const uint64_t threshold = (-n) % n;
        for (;;) {
            const uint64_t x = engine_();
            if (x >= threshold) return x % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Derives an independent stream, e.g. one per sweep cell or restart.
    static uint64_t mix(uint64_t seed, uint64_t stream) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace patrolkit
