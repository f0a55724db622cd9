#pragma once

#include <cstdint>
#include <random>

namespace tcm {

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// 64-bit Mersenne Twister with portable helpers. The std distributions are
/// avoided so that traces are identical across standard library vendors.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi] (inclusive), rejection sampled.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi)
    {
        const std::uint64_t span = hi - lo;
        if (span == UINT64_MAX) return engine_();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + v % range;
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal(double mean, double stdev);

  private:
    std::mt19937_64 engine_;
};

} // namespace tcm
