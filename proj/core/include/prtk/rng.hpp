#pragma once

#include <cstdint>

namespace prtk {

// Small deterministic generator for simulation plumbing. Identical seeds give
// identical streams on every platform, which the trace/simulator contracts
// require; not related to the generator under study.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next() >> 32); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return uniform() < p; }

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Derives an independent stream, e.g. one per simulation trial.
    static SplitMix64 derive(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 d(seed ^ (0xA0761D6478BD642Full * (stream + 1)));
        d.next();
        return d;
    }
};

}  // namespace prtk
