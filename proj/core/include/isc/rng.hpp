#pragma once

#include <cstdint>

namespace isc {

// SplitMix64. Chosen over std::mt19937 so that any reimplementation in
// another language reproduces identical datasets from the same seed.
// Stream for seed 0 begins 0xE220A8397B1DCDAF.
class Rng64 {
  public:
    explicit Rng64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [lo, hi], inclusive.
    int next_int(int lo, int hi) {
        const int span = hi - lo + 1;
        int v = lo + static_cast<int>(next_double() * span);
        return v > hi ? hi : v;
    }

    bool next_bool(double p) { return next_double() < p; }

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

}  // namespace isc
