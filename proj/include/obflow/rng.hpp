#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "obflow/vec.hpp"

namespace obflow {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (seed, counter), so streams assigned per (step, site, kind, copy) give
// bit-identical results for any execution order or thread count.
struct Philox4x32 {
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> c, uint32_t k0, uint32_t k1) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += kWeyl0;
                k1 += kWeyl1;
            }
            const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
            const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
            c = {static_cast<uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<uint32_t>(p1),
                 static_cast<uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<uint32_t>(p0)};
        }
        return c;
    }
};

// (0,1)-open uniform from a 64-bit word. The 52-bit mapping keeps both
// endpoints exactly representable: min 2^-53, max 1 - 2^-53.
inline double uniform01(uint64_t w) {
    return (static_cast<double>(w >> 12) + 0.5) * 0x1p-52;
}

// One Philox block keyed by the run seed -> two standard normals (Box-Muller).
// Counter layout: (step, stream, salt, 0).
inline Vec2 normal_pair(uint64_t seed, uint32_t step, uint32_t stream, uint32_t salt) {
    const auto w = Philox4x32::block({step, stream, salt, 0u},
                                     static_cast<uint32_t>(seed),
                                     static_cast<uint32_t>(seed >> 32));
    const double u1 = uniform01((static_cast<uint64_t>(w[0]) << 32) | w[1]);
    const double u2 = uniform01((static_cast<uint64_t>(w[2]) << 32) | w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

// One Philox block on the uniform lane (counter (step, stream, salt, 1)),
// independent of the normal_pair draw at the same counter.
inline double uniform_at(uint64_t seed, uint32_t step, uint32_t stream, uint32_t salt) {
    const auto w = Philox4x32::block({step, stream, salt, 1u},
                                     static_cast<uint32_t>(seed),
                                     static_cast<uint32_t>(seed >> 32));
    return uniform01((static_cast<uint64_t>(w[0]) << 32) | w[1]);
}

// Sequential stream view over the counter space, for oracle paths and tests.
class RngStream {
public:
    RngStream(uint64_t seed, uint32_t stream, uint32_t salt)
        : seed_(seed), stream_(stream), salt_(salt) {}

    Vec2 next_normal_pair() { return normal_pair(seed_, step_++, stream_, salt_); }

    double next_uniform() { return uniform_at(seed_, step_++, stream_, salt_); }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

private:
    uint64_t seed_;
    uint32_t stream_;
    uint32_t salt_;
    uint32_t step_ = 0;
};

}  // namespace obflow
