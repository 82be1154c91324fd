#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace gdd {

/// Counter-based generator: output i is a fixed hash of (seed, i), so the
/// stream is identical on every platform and never depends on the standard
/// library's distribution implementations.
///
/// Not thread-safe; give each concurrent task its own instance (see fork()).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept { return mix(seed_ ^ mix(counter_++ + 0x9E3779B97F4A7C15ULL)); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    /// Independent stream keyed by a name, e.g. a parameter name.
    Rng fork(std::string_view key) const noexcept { return Rng(mix(seed_ ^ fnv1a(key))); }
    Rng fork(std::uint64_t key) const noexcept { return Rng(mix(seed_ + mix(key ^ 0xD1B54A32D192ED03ULL))); }

    static std::uint64_t fnv1a(std::string_view s) noexcept {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace gdd
