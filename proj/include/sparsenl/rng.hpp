#pragma once
#include <cstdint>

namespace sparsenl {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of the k-th independent substream derived from `seed`.
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t k)
{
    return mix64(seed ^ mix64(k + 0x632be59bd9b4e019ULL));
}

/**
 * Small counter-based generator. Output depends only on (seed, stream) and
 * the number of draws, so results are identical across platforms and thread
 * counts. Distributions are implemented here rather than taken from <random>,
 * whose algorithms are implementation defined.
 */
class Rng
{
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : key_(subseed(seed, stream)) {}

    std::uint64_t next() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    // +1 or -1 with equal probability.
    double sign() { return (next() >> 63) ? 1.0 : -1.0; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sparsenl
