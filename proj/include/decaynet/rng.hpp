#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace decaynet {

/// splitmix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of sub-stream `index` under `master`.
///
/// For a fixed master this is injective in `index`: the golden-ratio
/// multiplier is odd, so `master + (index + 1) * phi` never repeats, and
/// mix64 is a bijection. The function is part of the reproducibility
/// contract and must not change between releases.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

/// Thin wrapper over mt19937_64 with portable draws.
///
/// The standard distributions are implementation-defined, which would make
/// output files differ across standard libraries; these draws only depend on
/// the engine's (fully specified) output sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Always consumes exactly one draw, even for p = 0 or p = 1.
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n). Rejection sampling; n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
                                    - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Failures before the first success of a Bernoulli(p) sequence, 0 < p < 1.
    std::uint64_t geometric(double p) {
        const double u = 1.0 - uniform(); // (0, 1]
        const double g = std::floor(std::log(u) / std::log1p(-p));
        if (!(g < 1.8e19)) return std::numeric_limits<std::uint64_t>::max();
        return static_cast<std::uint64_t>(g);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::iter_swap(first + (i - 1), first + j);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace decaynet
