#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qcoop/numerics.hpp"
#include "qcoop/plant.hpp"
#include "qcoop/quantizer.hpp"

namespace qcoop {

// Scaling base gamma, quantizer steps and level counts, observer gain G (n x p).
struct CommParams {
    double gamma = 0.95;
    double alpha = 1.0;
    double alpha_u = 1.0;
    std::int64_t levels_y = 20;
    std::int64_t levels_u = 20;
    Matrix observer_gain;

    QuantizerSpec state_quantizer() const { return {alpha, levels_y}; }
    QuantizerSpec control_quantizer() const { return {alpha_u, levels_u}; }
};

// Throws ConfigError unless 0 < gamma < 1, both quantizers are valid and G is n x p.
void validate(const CommParams& comm, const LtiPlant& plant);

// Bits one channel carries per tick: p state symbols plus m control symbols.
int bits_per_channel_step(const CommParams& comm, const LtiPlant& plant);

enum class CodecMode {
    quantized,  // indices through Q_{alpha,L} / Q_{alpha_u,L_u}, scaled by gamma^(t-1)
    precise,    // identity quantizer, unit scale, u_hat tracks u exactly
};

// Shared by encoders and decoders. After processing tick t, `t` holds t and
// `scale` holds gamma^t, the factor of tick t+1, built by repeated multiplication.
struct CodecState {
    Vector x_hat;
    Vector u_hat;
    std::uint64_t t = 0;
    double scale = 1.0;
};

// Symbols emitted by one agent at tick t >= 1. In precise mode the index
// vectors are empty, `raw_s` carries the unscaled innovation y - C x_hat and
// `raw_s_u` carries u itself.
struct SymbolFrame {
    std::uint64_t t = 0;
    std::uint32_t sender = 0;
    std::vector<std::int64_t> s;
    std::vector<std::int64_t> s_u;
    Vector raw_s;
    Vector raw_s_u;

    bool operator==(const SymbolFrame&) const = default;
};

struct StateEmission {
    std::vector<std::int64_t> indices;
    Vector scaled_innovation;  // (y_prev - C x_hat) / gamma^(t-1)
    Vector error;              // scaled_innovation - alpha * indices
    std::size_t saturated = 0;
};

struct ControlEmission {
    std::vector<std::int64_t> indices;
    Vector scaled_innovation;  // (u_now - u_hat) / gamma^(t-1)
    Vector error;
    std::size_t saturated = 0;
};

// Encoder Theta_j. One tick is emit_state_symbol followed by emit_control_symbol.
class Encoder {
public:
    Encoder(const LtiPlant& plant, const CommParams& comm, std::uint32_t sender, Vector x_hat0,
            Vector u_hat0, CodecMode mode = CodecMode::quantized);

    // s_j(t) from the sender's own y(t-1); advances x_hat with the previous u_hat.
    StateEmission emit_state_symbol(const Vector& y_prev);
    // s_u,j(t) from the freshly computed u_j(t); advances u_hat and closes the tick.
    ControlEmission emit_control_symbol(const Vector& u_now);

    const CodecState& state() const { return state_; }
    // Frame of the tick in progress (state part only) or of the last completed tick.
    const SymbolFrame& frame() const { return frame_; }

private:
    LtiPlant plant_;
    CommParams comm_;
    CodecMode mode_;
    CodecState state_;
    SymbolFrame frame_;
    bool mid_tick_ = false;
};

// Decoder Psi_ji: replays frames of sender j with the encoder's arithmetic.
class Decoder {
public:
    Decoder(const LtiPlant& plant, const CommParams& comm, std::uint32_t sender, Vector x_hat0,
            Vector u_hat0, CodecMode mode = CodecMode::quantized);

    // Throws ProtocolError on a gap, reordering, wrong sender or bad symbol sizes.
    void apply(const SymbolFrame& frame);
    // The two halves of apply(), for receivers that act on x_hat(t) before
    // the control symbols of tick t exist.
    void apply_state(const SymbolFrame& frame);
    void apply_control(const SymbolFrame& frame);

    const CodecState& state() const { return state_; }

private:
    LtiPlant plant_;
    CommParams comm_;
    std::uint32_t sender_;
    CodecMode mode_;
    CodecState state_;
    bool mid_tick_ = false;
};

// Wire layout: u64 LE t, u32 LE sender, p x i16 LE state indices, m x i16 LE
// control indices. Quantized frames only.
std::vector<std::uint8_t> encode_frame(const SymbolFrame& frame, std::int64_t levels_y,
                                       std::int64_t levels_u);
SymbolFrame decode_frame(std::span<const std::uint8_t> bytes, std::size_t p, std::size_t m,
                         std::int64_t levels_y, std::int64_t levels_u);
std::size_t frame_size(std::size_t p, std::size_t m);

}  // namespace qcoop
