#pragma once

#include <cstdint>

namespace delayshare {

// Counter-based splittable generator. A stream is identified by
// (seed, stream_id); equal identifiers reproduce the same sequence
// regardless of how many other streams exist or which thread draws
// from it. One splitmix64 round per output.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(mix64(mix64(seed + kGolden) ^ mix64(stream_id + 2 * kGolden))) {}

    std::uint64_t next_u64() {
        counter_ += kGolden;
        std::uint64_t z = key_ + counter_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as the argument of a logarithm.
    double next_double_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

    // One-shot derivation of an independent child seed.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
        return RngStream(seed, tag).next_u64();
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stream-id namespaces. Keeps the sample matrix, the permutation draws and
// the per-run experiment streams disjoint under one user-facing seed.
namespace streams {
inline constexpr std::uint64_t kSampleColumnBase = 0x1000000000ull;
inline constexpr std::uint64_t kPermutationBase = 0x2000000000ull;
inline constexpr std::uint64_t kExperimentRunBase = 0x3000000000ull;
inline constexpr std::uint64_t kRealizationDraw = 0x4000000000ull;
inline constexpr std::uint64_t kAllocationSeedTag = 0x5000000000ull;
}  // namespace streams

}  // namespace delayshare
