#pragma once

#include <cstdint>

namespace sgdd {

/// Splittable counter-style generator: one instance per chain/particle.
///
/// The (seed, stream_id) pair is hashed into the initial state, so streams with
/// different ids are statistically independent and a run is reproduced exactly
/// by reusing the pair. splitmix64 core (Steele, Lea, Flood 2014); all integer
/// arithmetic, so trajectories are bit-identical across platforms for one build.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : state_(mix(mix(seed ^ 0x8f5c'29d3'7a1f'be42ULL) + stream_id)) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n); n >= 1. Multiply-shift (Lemire) without the
    /// rejection loop: the bias is < 2^-32 per draw, far below every sampling
    /// tolerance in this project, and keeps draws-per-call constant.
    std::uint32_t next_below(std::uint32_t n) {
        const std::uint64_t x = next_u64() >> 32;
        return static_cast<std::uint32_t>((x * n) >> 32);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

} // namespace sgdd
