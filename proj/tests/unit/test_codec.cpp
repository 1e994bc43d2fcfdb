#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "qcoop/codec.hpp"
#include "qcoop/error.hpp"
#include "support/generators.hpp"

namespace qcoop {
namespace {

using testing::Gen;

LtiPlant plant() { return testing::reference_plant(); }
CommParams comm() { return testing::reference_comm(); }

TEST(CommParams, Validation) {
    EXPECT_NO_THROW(validate(comm(), plant()));
    CommParams c = comm();
    c.gamma = 1.0;
    EXPECT_THROW(validate(c, plant()), ConfigError);
    c = comm();
    c.observer_gain = Matrix::Zero(1, 2);
    EXPECT_THROW(validate(c, plant()), ConfigError);
    c = comm();
    c.levels_u = 0;
    EXPECT_THROW(validate(c, plant()), ConfigError);
}

TEST(CommParams, ReferenceChannelCostsTwelveBits) {
    EXPECT_EQ(bits_per_channel_step(comm(), plant()), 12);
}

TEST(Encoder, PerfectEstimateEmitsZero) {
    Encoder enc(plant(), comm(), 0, Vector{{1.0, 2.0}}, Vector{{0.5}});
    const Vector y = plant().c * Vector{{1.0, 2.0}};
    const auto s = enc.emit_state_symbol(y);
    EXPECT_EQ(s.indices, std::vector<std::int64_t>{0});
    const Vector want = plant().a * Vector{{1.0, 2.0}} + plant().b * Vector{{0.5}};
    EXPECT_EQ(enc.state().x_hat, want);
}

TEST(Encoder, FirstStateSymbol) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    const auto s = enc.emit_state_symbol(Vector{{3.7}});
    EXPECT_EQ(s.indices, std::vector<std::int64_t>{4});
    EXPECT_EQ(enc.state().x_hat, (Vector{{2.0, 0.0}}));
    EXPECT_NEAR(s.error(0), -0.3, 1e-15);
}

TEST(Encoder, FirstControlSymbol) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    enc.emit_state_symbol(Vector{{0.0}});
    const auto s = enc.emit_control_symbol(Vector{{0.74}});
    EXPECT_EQ(s.indices, std::vector<std::int64_t>{1});
    EXPECT_EQ(enc.state().u_hat, (Vector{{1.0}}));
    EXPECT_EQ(enc.state().t, 1u);
    EXPECT_DOUBLE_EQ(enc.state().scale, 0.95);
}

TEST(Encoder, UnchangedControlEmitsZero) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector{{0.3}});
    enc.emit_state_symbol(Vector{{0.0}});
    const auto s = enc.emit_control_symbol(Vector{{0.3}});
    EXPECT_EQ(s.indices, std::vector<std::int64_t>{0});
    EXPECT_EQ(enc.state().u_hat, (Vector{{0.3}}));
}

TEST(Encoder, ClampBoundaryAndSaturation) {
    Encoder at_edge(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    const auto a = at_edge.emit_state_symbol(Vector{{19.5}});
    EXPECT_EQ(a.indices[0], 20);
    EXPECT_EQ(a.saturated, 0u);
    Encoder beyond(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    const auto b = beyond.emit_state_symbol(Vector{{20.5 + 1e-6}});
    EXPECT_EQ(b.indices[0], 20);
    EXPECT_EQ(b.saturated, 1u);
}

TEST(Encoder, EnforcesTickOrder) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    EXPECT_THROW(enc.emit_control_symbol(Vector{{0.0}}), ProtocolError);
    enc.emit_state_symbol(Vector{{0.0}});
    EXPECT_THROW(enc.emit_state_symbol(Vector{{0.0}}), ProtocolError);
    EXPECT_THROW(enc.emit_control_symbol(Vector{{0.0, 1.0}}), ConfigError);
}

TEST(Encoder, ScaleIsRepeatedMultiplication) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    double want = 1.0;
    for (int t = 1; t <= 60; ++t) {
        enc.emit_state_symbol(Vector{{0.0}});
        enc.emit_control_symbol(Vector{{0.0}});
        want *= 0.95;
        ASSERT_EQ(enc.state().scale, want);
    }
}

// Control-estimate trajectory rebuilt from the symbols alone.
TEST(Encoder, ControlEstimateReplaysFromSymbols) {
    Gen g(51);
    Encoder enc(plant(), comm(), 2, Vector::Zero(2), Vector{{0.25}});
    double u_hat = 0.25, scale = 1.0;
    for (int t = 1; t <= 50; ++t) {
        enc.emit_state_symbol(Vector{{g.uniform(-3.0, 3.0)}});
        const auto s = enc.emit_control_symbol(Vector{{g.uniform(-3.0, 3.0)}});
        u_hat = u_hat + scale * (1.0 * static_cast<double>(s.indices[0]));
        scale *= 0.95;
        ASSERT_EQ(enc.state().u_hat(0), u_hat) << "t=" << t;
    }
}

TEST(Decoder, ZeroSymbolsKeepZeroEstimate) {
    Decoder dec(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    for (std::uint64_t t = 1; t <= 100; ++t) {
        SymbolFrame f;
        f.t = t;
        f.sender = 0;
        f.s = {0};
        f.s_u = {0};
        dec.apply(f);
        ASSERT_TRUE(dec.state().x_hat.isZero(0.0));
        ASSERT_TRUE(dec.state().u_hat.isZero(0.0));
    }
}

TEST(Decoder, TracksEncoderBitExactly) {
    for (CodecMode mode : {CodecMode::quantized, CodecMode::precise}) {
        Gen g(53);
        const Vector x0 = g.vector(2), u0 = g.vector(1);
        Encoder enc(plant(), comm(), 1, x0, u0, mode);
        Decoder dec(plant(), comm(), 1, x0, u0, mode);
        for (int t = 1; t <= 100; ++t) {
            enc.emit_state_symbol(g.vector(1, -5.0, 5.0));
            enc.emit_control_symbol(g.vector(1, -5.0, 5.0));
            dec.apply(enc.frame());
            ASSERT_EQ(dec.state().x_hat, enc.state().x_hat) << "t=" << t;
            ASSERT_EQ(dec.state().u_hat, enc.state().u_hat) << "t=" << t;
            ASSERT_EQ(dec.state().scale, enc.state().scale);
        }
    }
}

TEST(Decoder, SplitApplyMatchesEncoderMidTick) {
    Encoder enc(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    Decoder dec(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    enc.emit_state_symbol(Vector{{3.7}});
    dec.apply_state(enc.frame());
    EXPECT_EQ(dec.state().x_hat, enc.state().x_hat);
    EXPECT_THROW(dec.apply_state(enc.frame()), ProtocolError);
    enc.emit_control_symbol(Vector{{0.74}});
    dec.apply_control(enc.frame());
    EXPECT_EQ(dec.state().u_hat, enc.state().u_hat);
}

TEST(Decoder, RejectsProtocolViolations) {
    SymbolFrame f;
    f.t = 1;
    f.sender = 0;
    f.s = {0};
    f.s_u = {0};

    Decoder gap(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    SymbolFrame skipped = f;
    skipped.t = 2;
    EXPECT_THROW(gap.apply(skipped), ProtocolError);

    Decoder wrong(plant(), comm(), 1, Vector::Zero(2), Vector::Zero(1));
    EXPECT_THROW(wrong.apply(f), ProtocolError);

    Decoder sizes(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    SymbolFrame two = f;
    two.s = {0, 0};
    EXPECT_THROW(sizes.apply(two), ProtocolError);

    Decoder range(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    SymbolFrame big = f;
    big.s_u = {21};
    EXPECT_THROW(range.apply(big), ProtocolError);

    Decoder order(plant(), comm(), 0, Vector::Zero(2), Vector::Zero(1));
    EXPECT_THROW(order.apply_control(f), ProtocolError);
    order.apply(f);
    EXPECT_THROW(order.apply(f), ProtocolError);

    EXPECT_THROW(Decoder(plant(), comm(), 0, Vector::Zero(3), Vector::Zero(1)), ConfigError);
}

TEST(PreciseMode, ObserverErrorFollowsLuenbergerRecursion) {
    // Sender state evolves by x+ = A x + B u with u_hat == u, so the
    // estimate error obeys e+ = (A - G C) e exactly in exact arithmetic.
    const LtiPlant p = plant();
    Gen g(57);
    Vector x = g.vector(2, -5.0, 5.0);
    Encoder enc(p, comm(), 0, Vector::Zero(2), Vector::Zero(1), CodecMode::precise);
    Vector y_prev = p.c * x;
    Vector u_prev = Vector::Zero(1);
    Vector e = x - enc.state().x_hat;
    const Matrix j = p.a - comm().observer_gain * p.c;
    for (int t = 1; t <= 30; ++t) {
        x = p.a * x + p.b * u_prev;
        enc.emit_state_symbol(y_prev);
        const Vector u = g.vector(1);
        enc.emit_control_symbol(u);
        e = j * e;
        ASSERT_LE((x - enc.state().x_hat - e).norm(), 1e-10) << "t=" << t;
        y_prev = p.c * x;
        u_prev = u;
    }
}

TEST(Frame, MinimalFrameIsSixteenBytes) {
    SymbolFrame f;
    f.t = 0;
    f.sender = 1;
    f.s = {0};
    f.s_u = {0};
    const auto bytes = encode_frame(f, 20, 20);
    ASSERT_EQ(bytes.size(), 16u);
    EXPECT_EQ(frame_size(1, 1), 16u);
    EXPECT_EQ(decode_frame(bytes, 1, 1, 20, 20), f);
}

TEST(Frame, ExtremeIndicesRoundTrip) {
    SymbolFrame f;
    f.t = 7;
    f.sender = 3;
    f.s = {-20};
    f.s_u = {20};
    const auto bytes = encode_frame(f, 20, 20);
    EXPECT_EQ(bytes[0], 7);
    EXPECT_EQ(bytes[8], 3);
    EXPECT_EQ(decode_frame(bytes, 1, 1, 20, 20), f);
}

TEST(Frame, RandomRoundTrips) {
    Gen g(59);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto ly = g.integer(1, 32767), lu = g.integer(1, 32767);
        SymbolFrame f;
        f.t = static_cast<std::uint64_t>(g.engine()());
        f.sender = static_cast<std::uint32_t>(g.engine()());
        const auto p = g.integer(1, 4), m = g.integer(1, 4);
        for (int k = 0; k < p; ++k) f.s.push_back(g.integer(-ly, ly));
        for (int k = 0; k < m; ++k) f.s_u.push_back(g.integer(-lu, lu));
        const auto bytes = encode_frame(f, ly, lu);
        ASSERT_EQ(bytes.size(), frame_size(f.s.size(), f.s_u.size()));
        ASSERT_EQ(decode_frame(bytes, f.s.size(), f.s_u.size(), ly, lu), f) << "trial " << trial;
    }
}

TEST(Frame, Errors) {
    SymbolFrame f;
    f.t = 1;
    f.s = {5};
    f.s_u = {0};
    EXPECT_THROW(encode_frame(f, 4, 20), ProtocolError);
    auto bytes = encode_frame(f, 20, 20);
    bytes.pop_back();
    EXPECT_THROW(decode_frame(bytes, 1, 1, 20, 20), ProtocolError);
    bytes = encode_frame(f, 20, 20);
    EXPECT_THROW(decode_frame(bytes, 1, 1, 4, 20), ProtocolError);
}

}  // namespace
}  // namespace qcoop
