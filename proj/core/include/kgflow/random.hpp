#ifndef KGFLOW_RANDOM_HPP
#define KGFLOW_RANDOM_HPP

#include <cstdint>

namespace kgflow {

/// Counter-based splitmix64 stream. Each (seed, stream) pair gives an
/// independent deterministic sequence, so per-sample streams can be drawn
/// concurrently with no shared state and identical results at any worker
/// count.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(seed + stream * 0x9E3779B97F4A7C15ULL) {
        // Decorrelate nearby (seed, stream) pairs.
        next_u64();
        next_u64();
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * next_double(); }

  private:
    std::uint64_t state_;
};

}  // namespace kgflow

#endif
