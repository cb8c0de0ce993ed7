#pragma once

#include <cstdint>

namespace curv {

// Small deterministic generator (splitmix64 + Box-Muller). Used everywhere
// randomness is needed so outputs are bit-identical across platforms for a
// fixed seed; the standard library distributions make no such promise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal.
    double next_normal();

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace curv
