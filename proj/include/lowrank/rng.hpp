#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lowrank {

// SplitMix64 (Steele, Lea and Flood). State walks by the golden-ratio
// increment; the output is an avalanche mix of the new state. Used only
// to expand small seeds into xoshiro256++ states.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// xoshiro256++ 1.0 (Blackman and Vigna). 256-bit state, 64-bit output.
class Xoshiro256pp {
  public:
    constexpr Xoshiro256pp(std::uint64_t s0, std::uint64_t s1,
                           std::uint64_t s2, std::uint64_t s3) noexcept
        : s_{s0, s1, s2, s3} {}

    // State from four consecutive SplitMix64 outputs, the initialization
    // the xoshiro authors recommend. A zero seed is fine: SplitMix64
    // never emits four zeros in a row.
    static constexpr Xoshiro256pp seeded(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        const std::uint64_t s0 = sm.next();
        const std::uint64_t s1 = sm.next();
        const std::uint64_t s2 = sm.next();
        const std::uint64_t s3 = sm.next();
        return {s0, s1, s2, s3};
    }

    constexpr std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

// Standard normal stream: Box-Muller over xoshiro256++ output, always
// consuming exactly two 64-bit words per generated pair so the mapping
// from raw stream to normals is fixed.
class GaussianStream {
  public:
    explicit constexpr GaussianStream(const Xoshiro256pp& gen) noexcept : gen_(gen) {}

    // Uniform on [0, 1), 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53;
    }

    double next() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite; u2 in [0, 1).
        const double u1 = (static_cast<double>(gen_.next() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(gen_.next() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

  private:
    Xoshiro256pp gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Independent stream for replicate b of a run seeded with `seed`: the
// xoshiro state is expanded from SplitMix64 state seed + b (mod 2^64).
// A pure function of (seed, b), so replicates can run in any order and
// on any thread without changing the draws.
inline GaussianStream replicate_stream(std::uint64_t seed, std::uint64_t b) noexcept {
    return GaussianStream(Xoshiro256pp::seeded(seed + b));
}

}  // namespace lowrank
