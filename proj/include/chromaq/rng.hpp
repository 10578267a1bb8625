#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace chromaq {

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 finalizer step; bijective on 64-bit integers.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives a stage seed from a master seed. Every stochastic stage of the
/// pipeline draws its seed through this exact formula so a run can be
/// reproduced module by module:
///
///   derive_seed(master, stage, index)
///     = splitmix64(master ^ splitmix64(fnv1a64(stage) + index * 0x9E3779B97F4A7C15))
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and converts to doubles/integers with explicit
/// arithmetic rather than the implementation-defined std distributions, so a
/// seed produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; draws are cached in pairs.
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Unbiased integer in [0, n) by rejection sampling. n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chromaq
