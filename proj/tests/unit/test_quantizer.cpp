#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "qcoop/error.hpp"
#include "qcoop/quantizer.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace qcoop {
namespace {

const QuantizerSpec kUnit{1.0, 20};

TEST(Quantize, HalfOpenBinBoundaries) {
    EXPECT_EQ(quantize(kUnit, 0.49).index, 0);
    EXPECT_EQ(quantize(kUnit, 0.5).index, 1);
    EXPECT_EQ(quantize(kUnit, -0.5).index, 0);
    EXPECT_EQ(quantize(kUnit, -0.5000001).index, -1);
    EXPECT_EQ(quantize(kUnit, -1.5).index, -2);  // odd extension of the 1.5 -> 2 edge
    EXPECT_EQ(quantize(kUnit, 1.5).index, 2);
}

TEST(Quantize, ClampsAndFlagsSaturation) {
    const auto q = quantize(kUnit, 25.0);
    EXPECT_EQ(q.index, 20);
    EXPECT_TRUE(q.saturated);
    EXPECT_DOUBLE_EQ(q.error, 5.0);
    const auto n = quantize(kUnit, -25.0);
    EXPECT_EQ(n.index, -20);
    EXPECT_TRUE(n.saturated);
}

TEST(Quantize, ClampEdgeIsNotSaturation) {
    EXPECT_EQ(quantize(kUnit, 19.5).index, 20);
    EXPECT_FALSE(quantize(kUnit, 19.5).saturated);
    EXPECT_FALSE(quantize(kUnit, 20.5).saturated);
    EXPECT_TRUE(quantize(kUnit, 20.5 + 1e-9).saturated);
}

TEST(Quantize, ValueIsIndexTimesStep) {
    const QuantizerSpec s{0.3, 7};
    for (double y = -3.0; y <= 3.0; y += 0.0137) {
        const auto q = quantize(s, y);
        EXPECT_EQ(q.value, static_cast<double>(q.index) * 0.3);
        EXPECT_EQ(q.error, y - q.value);
    }
}

TEST(Quantize, MatchesBinSearchOracleOnGrid) {
    const QuantizerSpec s{0.5, 3};
    for (int k = -200; k <= 200; ++k) {
        const double y = k / 100.0;
        EXPECT_EQ(quantize(s, y).index, testing::quantizer_bin_oracle(y, 0.5, 3)) << "y=" << y;
    }
}

TEST(Quantize, RejectsNonFiniteInput) {
    EXPECT_THROW(quantize(kUnit, std::nan("")), ConfigError);
    EXPECT_THROW(quantize(kUnit, INFINITY), ConfigError);
}

TEST(Quantize, VectorIsComponentwise) {
    const auto q = quantize(kUnit, Vector{{0.49, 3.7, -25.0}});
    EXPECT_EQ(q.indices, (std::vector<std::int64_t>{0, 4, -20}));
    EXPECT_EQ(q.saturated_count, 1u);
    EXPECT_DOUBLE_EQ(q.values(1), 4.0);
}

TEST(QuantizerSpec, Validation) {
    EXPECT_NO_THROW(validate(QuantizerSpec{1.0, 1}));
    EXPECT_THROW(validate(QuantizerSpec{0.0, 1}), ConfigError);
    EXPECT_THROW(validate(QuantizerSpec{1.5, 1}), ConfigError);
    EXPECT_THROW(validate(QuantizerSpec{0.5, 0}), ConfigError);
}

TEST(Bits, PerSymbol) {
    EXPECT_EQ(bits_per_symbol({1.0, 1}), 2);
    EXPECT_EQ(bits_per_symbol({1.0, 20}), 6);
    EXPECT_EQ(bits_per_symbol({1.0, 3}), 3);
    EXPECT_EQ(bits_per_symbol({1.0, 31}), 6);
    EXPECT_EQ(bits_per_symbol({1.0, 32}), 7);
}

TEST(Wire, IndexRoundTripAndRange) {
    std::vector<std::uint8_t> buf;
    append_index(buf, -20, 20);
    append_index(buf, 20, 20);
    append_index(buf, 0, 20);
    ASSERT_EQ(buf.size(), 6u);
    EXPECT_EQ(read_index(buf, 0, 20), -20);
    EXPECT_EQ(read_index(buf, 2, 20), 20);
    EXPECT_EQ(read_index(buf, 4, 20), 0);
    EXPECT_THROW(append_index(buf, 21, 20), ProtocolError);
    EXPECT_THROW(append_index(buf, 0, 40000), ProtocolError);
    EXPECT_THROW(read_index(buf, 5, 20), ProtocolError);
    EXPECT_THROW(read_index(buf, 0, 19), ProtocolError);
}

// Properties over randomized inputs for a spread of (p, M).
class QuantizerProperties : public ::testing::TestWithParam<QuantizerSpec> {};

TEST_P(QuantizerProperties, OddSymmetryOffBoundaries) {
    const QuantizerSpec s = GetParam();
    testing::Gen g(41);
    for (int i = 0; i < 20000; ++i) {
        const double y = g.uniform(-1.2, 1.2) * (static_cast<double>(s.levels) + 1.0) * s.step;
        const double frac = y / s.step - std::floor(y / s.step);
        if (std::abs(frac - 0.5) < 1e-9) continue;
        EXPECT_EQ(quantize(s, -y).index, -quantize(s, y).index) << "y=" << y;
    }
}

TEST_P(QuantizerProperties, BoundedErrorInsideRange) {
    const QuantizerSpec s = GetParam();
    testing::Gen g(43);
    const double range = (static_cast<double>(s.levels) + 0.5) * s.step;
    for (int i = 0; i < 20000; ++i) {
        const auto q = quantize(s, g.uniform(-range, range));
        EXPECT_FALSE(q.saturated);
        EXPECT_LE(std::abs(q.error), s.step / 2.0);
    }
}

TEST_P(QuantizerProperties, Monotone) {
    const QuantizerSpec s = GetParam();
    testing::Gen g(47);
    const double range = (static_cast<double>(s.levels) + 2.0) * s.step;
    for (int i = 0; i < 20000; ++i) {
        double a = g.uniform(-range, range), b = g.uniform(-range, range);
        if (a > b) std::swap(a, b);
        EXPECT_LE(quantize(s, a).index, quantize(s, b).index);
    }
}

TEST_P(QuantizerProperties, AlphabetIsFixed) {
    const QuantizerSpec s = GetParam();
    for (std::int64_t i = -s.levels; i <= s.levels; ++i) {
        EXPECT_EQ(quantize(s, static_cast<double>(i) * s.step).index, i);
    }
}

INSTANTIATE_TEST_SUITE_P(Specs, QuantizerProperties,
                         ::testing::Values(QuantizerSpec{1.0, 20}, QuantizerSpec{0.5, 3},
                                           QuantizerSpec{0.1, 1}, QuantizerSpec{0.37, 12},
                                           QuantizerSpec{1.0, 1000}));

}  // namespace
}  // namespace qcoop
