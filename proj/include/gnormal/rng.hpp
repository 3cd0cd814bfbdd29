#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
//
// Every draw is a pure function of (key, counter), so a replication's noise
// depends only on (seed, replication, step) and never on how replications
// are spread across workers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gnormal {

class Philox4x32 {
  public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(Block counter, std::array<std::uint32_t, 2> key) noexcept {
        for (int round = 0; round < 10; ++round) {
            counter = single_round(counter, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return counter;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Block single_round(const Block& ctr, const std::array<std::uint32_t, 2>& key) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
};

/// Standard normal draws for one replication; draw(step) is a pure function
/// of (seed, replication, step). Consecutive steps 2k and 2k + 1 share one
/// Philox block through the Box-Muller transform, so sequential access
/// through next() costs one block per two draws.
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t replication) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          replication_(replication) {}

    double draw(std::uint64_t step) noexcept {
        const std::uint64_t pair = step >> 1;
        if (pair != cached_pair_) fill(pair);
        return cache_[step & 1];
    }

    double next() noexcept { return draw(position_++); }

  private:
    // 53-bit uniform in (0, 1].
    static double uniform(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    void fill(std::uint64_t pair) noexcept {
        const Philox4x32::Block ctr{static_cast<std::uint32_t>(replication_),
                                    static_cast<std::uint32_t>(replication_ >> 32),
                                    static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32)};
        const auto out = Philox4x32::generate(ctr, key_);
        const double u1 = uniform(out[0], out[1]);
        const double u2 = uniform(out[2], out[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cache_[0] = radius * std::cos(angle);
        cache_[1] = radius * std::sin(angle);
        cached_pair_ = pair;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t replication_;
    std::uint64_t cached_pair_ = ~std::uint64_t{0};
    std::uint64_t position_ = 0;
    std::array<double, 2> cache_{};
};

}  // namespace gnormal
