#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mfg/rng.hpp"

using namespace mfg;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, IsAPureFunctionOfItsAddress) {
    const CounterRng a(42), b(42), c(43);
    EXPECT_EQ(a.raw(Stream::common, 7, 3), b.raw(Stream::common, 7, 3));
    EXPECT_NE(a.raw(Stream::common, 7, 3), c.raw(Stream::common, 7, 3));
    EXPECT_NE(a.raw(Stream::common, 7, 3), a.raw(Stream::idiosyncratic, 7, 3));
    EXPECT_NE(a.raw(Stream::common, 7, 3), a.raw(Stream::common, 7ull << 32, 3));
}

TEST(CounterRng, UniformsInUnitInterval) {
    const CounterRng rng(1);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto [u, v] = rng.uniforms(Stream::type_draw, i, 0);
        lo = std::min({lo, u, v});
        hi = std::max({hi, u, v});
        sum += u + v;
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(sum / (2.0 * n), 0.5, 3.0 * std::sqrt(1.0 / 12.0 / (2.0 * n)));
}

TEST(CounterRng, NormalMoments) {
    const CounterRng rng(5);
    const int n = 200000;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto [z, w] = rng.normals(Stream::idiosyncratic, i, 0);
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
        cross += z * w;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    cross /= n;
    EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
    EXPECT_NEAR(cross, 0.0, 4.0 / std::sqrt(n));
}
