#pragma once

#include <cstdint>

namespace hypwalk {

// Counter-based generator built from the SplitMix64 finalizer (Steele, Lea,
// Flood 2014; Vigna 2015). Every output is a pure function of
// (seed, stream, counter), so trajectories are reproducible regardless of
// scheduling, worker count, or platform: only 64-bit integer arithmetic.

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Per-stream key; one stream per trajectory index.
inline uint64_t stream_key(uint64_t seed, uint64_t stream) {
    uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
    return mix64(h ^ (stream + 0x632BE59BD9B4E019ULL));
}

/// The `counter`-th output of the stream.
inline uint64_t counter_rng(uint64_t key, uint64_t counter) {
    return mix64(key ^ mix64(counter + 0x9E3779B97F4A7C15ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit_double(uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

/// Convenience view of one stream.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream) : key_(stream_key(seed, stream)) {}

    uint64_t bits(uint64_t counter) const { return counter_rng(key_, counter); }
    double uniform(uint64_t counter) const { return to_unit_double(bits(counter)); }

private:
    uint64_t key_;
};

}  // namespace hypwalk
