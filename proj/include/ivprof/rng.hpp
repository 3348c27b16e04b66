#pragma once

#include <array>
#include <cstdint>

#include "ivprof/stats.hpp"

namespace ivprof {

// Name recorded in output metadata next to every seed.
inline constexpr const char* kRngName = "philox4x32-10";

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Derives an independent 64-bit seed from a master seed and up to two
// indices (replicate number, purpose tag, ...). Pure mixing, no state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t out = detail::splitmix64(s);
    s ^= a + 0x632BE59BD9B4E019ULL;
    out ^= detail::splitmix64(s);
    s ^= b + 0x9E3779B97F4A7C15ULL;
    out ^= detail::splitmix64(s);
    return out;
}

// Philox4x32-10 counter-based generator (Salmon et al., Random123 family).
// The 64-bit key is the seed; the high half of the 128-bit counter is the
// substream id, the low half counts blocks. Substreams for distinct
// (seed, stream) pairs never overlap, which is what makes replicate-level
// parallelism reproducible: worker count cannot change any stream.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    // One 10-round block: 4 x 32-bit outputs for a given counter/key.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        constexpr std::uint64_t kM0 = 0xD2511F53ULL;
        constexpr std::uint64_t kM1 = 0xCD9E8D57ULL;
        constexpr std::uint32_t kW0 = 0x9E3779B9U;
        constexpr std::uint32_t kW1 = 0xBB67AE85U;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = kM0 * ctr[0];
            const std::uint64_t p1 = kM1 * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }

    std::uint64_t next_u64() {
        if (have_half_) {
            have_half_ = false;
            return half_;
        }
        const auto out = block(counter_, key_);
        if (++counter_[0] == 0) ++counter_[1];  // stream id words never carry
        half_ = static_cast<std::uint64_t>(out[2]) | (static_cast<std::uint64_t>(out[3]) << 32);
        have_half_ = true;
        return static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1), safe to feed through log/quantile transforms.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    bool bernoulli(double p) { return uniform() < p; }

    // Inverse-CDF sampling: one draw per variate, fully reproducible.
    double normal(double mean, double sd) {
        return mean + sd * normal_quantile(uniform_open());
    }

    // Integer in [0, bound) via 128-bit multiply-shift.
    std::uint64_t bounded(std::uint64_t bound) {
        const auto wide = static_cast<unsigned __int128>(next_u64()) * bound;
        return static_cast<std::uint64_t>(wide >> 64);
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::uint64_t half_ = 0;
    bool have_half_ = false;
};

}  // namespace ivprof
