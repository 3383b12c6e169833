#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace omegarl {

// SplitMix64 step; used to expand seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** with hand-rolled sampling helpers.
//
// The standard <random> distributions are implementation-defined, which would
// break the "same seed, same run" contract across toolchains; everything that
// consumes randomness goes through this class so results are pinned.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
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

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform in {0, ..., n-1} (n > 0) via 128-bit multiply (no modulo bias
    // worth caring about at task sizes, and fully deterministic).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
    }

    // Index drawn proportionally to nonnegative weights (sum need not be 1).
    // Falls back to the last positive entry on accumulated rounding.
    std::size_t sample_weights(const std::vector<double>& w) {
        double total = 0.0;
        for (double v : w) total += v;
        double u = uniform01() * total;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] > 0.0) last_positive = i;
            u -= w[i];
            if (u < 0.0 && w[i] > 0.0) return i;
        }
        return last_positive;
    }

    // Derive a child seed from a base seed and up to three stream tags.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t s = base;
        std::uint64_t h = splitmix64(s);
        s ^= a * 0x9e3779b97f4a7c15ULL;
        h ^= splitmix64(s);
        s ^= b * 0xc2b2ae3d27d4eb4fULL;
        h ^= splitmix64(s);
        s ^= c * 0x165667b19e3779f9ULL;
        h ^= splitmix64(s);
        return h;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace omegarl
