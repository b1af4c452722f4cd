#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "rcs/error.hpp"

namespace rcs {

/// Derive a child seed from (base seed, stream tag, stream index).
/// FNV-1a over the tag bytes, mixed with a SplitMix64 finalizer, so every
/// (component, fold, class) combination gets an independent stream and
/// serial/parallel execution see identical randomness.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (h ^ (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream. The raw engine is std::mt19937_64 (fully
/// specified by the standard); the uniform/normal transforms are implemented
/// here rather than with std::*_distribution, whose output is
/// implementation-defined, so identical seeds give identical draws everywhere.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    [[nodiscard]] std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    [[nodiscard]] double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    [[nodiscard]] std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw InvalidArgument("uniform_index: n must be positive");
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via the Marsaglia polar method.
    [[nodiscard]] double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    /// Independent child stream for a named sub-computation. Derivation uses
    /// the construction seed, not the current engine state, so children do
    /// not depend on how much of the parent stream has been consumed.
    [[nodiscard]] SeededRng derive(std::string_view tag, std::uint64_t index = 0) const {
        return SeededRng(derive_seed(seed_, tag, index));
    }

    /// Fisher-Yates shuffle, driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace rcs
