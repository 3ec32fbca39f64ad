#pragma once

#include <cstdint>
#include <string_view>

namespace simpose {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Per-clip seed: pure avalanche of (master_seed, clip_index).
/// Injective in clip_index for a fixed master seed, so distinct clips
/// never share a seed. derive_clip_seed(0, 0) == 0x48218226FF3CD4BF.
constexpr std::uint64_t derive_clip_seed(std::uint64_t master_seed, std::uint64_t clip_index) {
    return mix64(master_seed ^ mix64(clip_index + kGoldenGamma));
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed for a named per-clip stage stream. Streams are keyed by name so
/// inserting a stage leaves every other stage's draws unchanged.
constexpr std::uint64_t substream_seed(std::uint64_t clip_seed, std::string_view stage) {
    return mix64(clip_seed ^ fnv1a64(stage));
}

/// SplitMix64 generator. Small, fast, and fully specified here so that
/// streams are reproducible independent of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi], unbiased via rejection.
    std::uint64_t next_below(std::uint64_t n) {
        // largest multiple of n that fits in 64 bits
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    int next_int(int lo, int hi) {
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double next_real(double lo, double hi) { return lo + (hi - lo) * next_real(); }

    bool next_bool(double p) { return next_real() < p; }

private:
    std::uint64_t state_;
};

inline Rng substream(std::uint64_t clip_seed, std::string_view stage) {
    return Rng(substream_seed(clip_seed, stage));
}

}  // namespace simpose
