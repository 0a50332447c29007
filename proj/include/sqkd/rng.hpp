// Deterministic random stream used for every random choice in the simulator.
//
// std::mt19937 output is portable but the std:: distributions on top of it
// are implementation-defined, so all sampling primitives are implemented
// here by hand. Reports produced with the same seed are byte-identical on
// every platform.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sqkd {

// SplitMix64 finalizer. Used for seeding and for seed derivation.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and two indices
// (e.g. grid point and trial number). Fixed function, part of the
// reproducibility contract: results may not depend on worker scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = splitmix64_mix(master ^ 0x633d5c1a9e2f0b47ull);
    h = splitmix64_mix(h ^ splitmix64_mix(a));
    h = splitmix64_mix(h ^ splitmix64_mix(b));
    return h;
}

// xoshiro256** seeded via SplitMix64.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s = splitmix64_mix(s);
            word = s;
        }
        // xoshiro must not start at the all-zero state.
        if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0) {
            state_[0] = 0x9e3779b97f4a7c15ull;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p_true) { return uniform() < p_true; }

    int bit() { return static_cast<int>(next_u64() >> 63); }

    // Uniform integer in [0, n). Rejection sampling over a power-of-two
    // mask keeps the draw unbiased and platform-independent.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t v = next_u64() & mask;
            if (v < n) return v;
        }
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace sqkd
