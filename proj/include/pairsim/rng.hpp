// Deterministic random number generation for the Monte Carlo engine.
//
// All randomness in the project flows through this xoshiro256++ generator,
// hand-seeded via splitmix64.  Standard-library distributions are avoided on
// purpose: their output is implementation-defined, and runs must be
// bit-reproducible for a given seed.  Parallel workers obtain independent
// substreams by deriving a fresh seed per gate block (keyed by block index,
// never by scheduling order).

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pairsim {

// splitmix64 finalizer; also used to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for a named substream of a base seed.  Tags are small integers chosen
// by the caller (sweep point index, experiment kind, block index, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(base ^ mix64(tag + 0x632BE59BD9B4E019ULL));
}

// xoshiro256++ (Blackman & Vigna).  Small, fast, and stable across platforms.
class Rng {
  public:
    static Rng seeded(std::uint64_t seed) {
        Rng r;
        std::uint64_t x = seed;
        bool all_zero = true;
        for (auto& word : r.state_) {
            x += 0x9E3779B97F4A7C15ULL;
            word = mix64(x);
            all_zero = all_zero && word == 0;
        }
        if (all_zero) r.state_[0] = 1;
        return r;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Poisson sample by cdf inversion; intended for small means (mu <~ 10),
    // which covers per-gate pair and noise rates by a wide margin.
    int poisson(double mu) {
        if (mu <= 0.0) return 0;
        return poisson_expneg(mu, std::exp(-mu));
    }

    // Hot-path variant with exp(-mu) precomputed by the caller.
    int poisson_expneg(double mu, double exp_neg_mu) {
        if (mu <= 0.0) return 0;
        const double u = uniform();
        double term = exp_neg_mu;
        double cum = term;
        int k = 0;
        while (u > cum && k < 1000) {
            ++k;
            term *= mu / static_cast<double>(k);
            cum += term;
        }
        return k;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace pairsim
