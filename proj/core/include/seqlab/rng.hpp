#pragma once

#include <cstdint>

namespace seqlab {

/// Counter-based deterministic random stream.
///
/// Each draw is a pure function of (seed, counter): draw i of a stream is
/// mix64(seed, counter_at_i), so identical (seed, counter) pairs produce
/// identical sequences on every platform. Streams are cheap values; derive()
/// forks an independent stream without touching the parent. Integer and
/// bit-level ops only, no libm in the core path.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return mix(seed_, counter_++); }

    /// Uniform double in [0, 1), 53 bits of randomness.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi). Degenerate range returns lo.
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [lo, hi], inclusive. Fixed-point multiply keeps the
    /// mapping platform independent.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto wide = static_cast<unsigned __int128>(next_u64()) * span;
        return lo + static_cast<std::int64_t>(wide >> 64);
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

    /// Independent child stream; tag selects which child.
    RngStream derive(std::uint64_t tag) const { return RngStream(mix(seed_, tag ^ kDeriveSalt)); }

    /// Hash a (seed, a, b, c) tuple into a fresh stream seed. Used to hand
    /// every augmentation call its own stream keyed by step, stream kind and
    /// sample index.
    static std::uint64_t mix4(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
        return mix(mix(mix(seed, a), b), c);
    }

    /// splitmix64-style finalizer over a (key, counter) pair.
    static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
        std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * (ctr + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kDeriveSalt = 0xd1b54a32d192ed03ULL;

    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace seqlab
