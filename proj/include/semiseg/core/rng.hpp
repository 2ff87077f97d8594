#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace semiseg {

// Deterministic RNG with cheap substream derivation. Every stochastic
// component takes an explicit Rng, so batch preparation can hand one
// independent stream to each sample slot and stay reproducible no matter
// how work is scheduled. Draw helpers are hand-rolled on top of
// mt19937_64 because std::uniform_real_distribution and friends are not
// bit-stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), base_(seed) {}

    // Derives an independent child stream via splitmix64 over (seed, salt).
    Rng substream(std::uint64_t salt) const {
        return Rng(seed_mix(seed_mix(base_ + 0x9e3779b97f4a7c15ULL) + salt));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); rejection sampling avoids modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        // Box-Muller; the sine value is discarded to keep draws stateless.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename Seq>
    void shuffle(Seq& v) {
        for (std::size_t i = std::size(v); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

private:
    static std::uint64_t seed_mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    std::uint64_t base_;
};

} // namespace semiseg
