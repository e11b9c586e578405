#pragma once

#include <cmath>
#include <cstdint>

namespace bblab {

/// Counter-based random stream. Stream i of a batch is derived from
/// (seed, i) by two rounds of the SplitMix64 finalizer, so any path can be
/// simulated on any worker and still draw exactly the same numbers. All
/// math is integer or explicit double arithmetic; no <random> engines are
/// involved, so output is identical across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : state_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream_id + 0xbf58476d1ce4e5b9ULL))) {}

    /// Next raw 64-bit word (SplitMix64 step).
    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in (0, 1).
    double next_uniform() {
        // 53 significant bits, shifted into (0,1); never returns 0 or 1.
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw via Box-Muller; the second value of each pair
    /// is cached so consecutive calls consume exactly one pair per two draws.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bblab
