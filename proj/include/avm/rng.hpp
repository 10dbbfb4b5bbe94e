#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace avm {

/// Deterministic pseudorandom source. The engine (mt19937_64) is fully
/// specified by the standard; the variate transforms below are hand-rolled
/// because the std distribution objects are not portable across standard
/// library implementations, and replayability matters more than speed here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Decorrelated stream for the same user seed (data sampling vs schedule
    /// sampling must not share draws).
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1)));
    }

    std::uint64_t next() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one of the pair is discarded to keep
    /// the draw count per call fixed).
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace avm
