#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace mattis {

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (key, counter), so a stream keyed by (seed, purpose, stream index)
// reproduces bit-identically regardless of how work is split across threads.

enum class RngPurpose : std::uint32_t {
    disorder = 1,
    chi = 2,
    mcmc = 3,
    optimizer = 4,
    test = 5,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::uint32_t k0, std::uint32_t k1,
                                                  std::uint64_t c_lo, std::uint64_t c_hi)
{
    std::uint32_t x0 = static_cast<std::uint32_t>(c_lo);
    std::uint32_t x1 = static_cast<std::uint32_t>(c_lo >> 32);
    std::uint32_t x2 = static_cast<std::uint32_t>(c_hi);
    std::uint32_t x3 = static_cast<std::uint32_t>(c_hi >> 32);
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = 0xD2511F53ULL * x0;
        const std::uint64_t p1 = 0xCD9E8D57ULL * x2;
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t y0 = hi1 ^ x1 ^ k0;
        const std::uint32_t y1 = lo1;
        const std::uint32_t y2 = hi0 ^ x3 ^ k1;
        const std::uint32_t y3 = lo0;
        x0 = y0;
        x1 = y1;
        x2 = y2;
        x3 = y3;
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return {x0, x1, x2, x3};
}

}  // namespace detail

class RngStream {
public:
    RngStream(std::uint64_t seed, RngPurpose purpose, std::uint64_t stream)
    {
        std::uint64_t k = detail::splitmix64(seed);
        k = detail::splitmix64(k ^ (static_cast<std::uint64_t>(purpose) << 32));
        k = detail::splitmix64(k ^ stream);
        key0_ = static_cast<std::uint32_t>(k);
        key1_ = static_cast<std::uint32_t>(k >> 32);
    }

    std::uint32_t next_u32()
    {
        if (buf_pos_ == 4) {
            buf_ = detail::philox4x32_10(key0_, key1_, counter_++, 0);
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        // Box-Muller on fixed counter budget: two uniforms per normal pair
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        cached_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

    // index into a discrete distribution with the given cumulative weights
    int categorical(std::span<const double> cumulative)
    {
        const double u = uniform();
        for (size_t i = 0; i + 1 < cumulative.size(); ++i)
            if (u < cumulative[i]) return static_cast<int>(i);
        return static_cast<int>(cumulative.size()) - 1;
    }

private:
    std::uint32_t key0_ = 0, key1_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    bool have_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace mattis
