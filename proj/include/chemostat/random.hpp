#pragma once

#include <cmath>
#include <cstdint>

namespace chemostat {

/// Counter-based 64-bit generator (splitmix64). The k-th output is a pure
/// function of seed + k, so streams are reproducible across platforms and
/// can be split by offsetting the seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard exponential deviate (inverse CDF on (0, 1]).
    double exponential() { return -std::log(1.0 - uniform01()); }

private:
    std::uint64_t state_;
};

} // namespace chemostat
