#pragma once

#include <array>
#include <cstdint>

#include "pathmed/special_functions.hpp"

namespace pathmed {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Derive an independent sub-seed from (seed, a, b). Used to hand each
/// stochastic stage of a replication its own master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return detail::mix64(detail::mix64(seed + detail::golden_gamma * (a + 1)) +
                         detail::golden_gamma * (b + 1));
}

/// xoshiro256** seeded through splitmix64. A (seed, stream) pair selects a
/// decorrelated sequence, so replication r can always use stream r and the
/// results never depend on thread scheduling. Normal variates come from the
/// inverse-CDF transform, which keeps every sequence reproducible across
/// platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = detail::mix64(seed + detail::golden_gamma * (stream + 1));
        for (auto& s : state_) {
            x += detail::golden_gamma;
            s = detail::mix64(x);
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0)
            state_[0] = detail::golden_gamma;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0,1); never returns an exact endpoint.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return norm_quantile(uniform01()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n) via the multiply-shift reduction.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace pathmed
