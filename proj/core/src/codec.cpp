#include "qcoop/codec.hpp"

#include <string>

#include "qcoop/error.hpp"

namespace qcoop {

namespace {

Vector reconstruct(const std::vector<std::int64_t>& indices, double step) {
    Vector v(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        v(static_cast<Eigen::Index>(k)) = step * static_cast<double>(indices[k]);
    }
    return v;
}

// The only x_hat / u_hat update paths; encoders and decoders both call these,
// which is what makes them bit-identical.
void advance_x_hat(const LtiPlant& plant, const CommParams& comm, CodecMode mode,
                   CodecState& st, const SymbolFrame& frame) {
    const Vector correction = mode == CodecMode::quantized
                                  ? Vector(st.scale * reconstruct(frame.s, comm.alpha))
                                  : frame.raw_s;
    st.x_hat = plant.a * st.x_hat + comm.observer_gain * correction + plant.b * st.u_hat;
}

void advance_u_hat(const CommParams& comm, CodecMode mode, CodecState& st,
                   const SymbolFrame& frame) {
    if (mode == CodecMode::quantized) {
        st.u_hat = st.u_hat + st.scale * reconstruct(frame.s_u, comm.alpha_u);
    } else {
        st.u_hat = frame.raw_s_u;
    }
}

void close_tick(const CommParams& comm, CodecMode mode, CodecState& st) {
    ++st.t;
    if (mode == CodecMode::quantized) st.scale *= comm.gamma;
}

CodecState initial_state(const LtiPlant& plant, Vector x_hat0, Vector u_hat0) {
    if (x_hat0.size() != plant.n() || u_hat0.size() != plant.m()) {
        throw ConfigError("codec: initial estimate dimensions do not match the plant");
    }
    CodecState st;
    st.x_hat = std::move(x_hat0);
    st.u_hat = std::move(u_hat0);
    return st;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
    if (offset + static_cast<std::size_t>(bytes) > in.size()) {
        throw ProtocolError("frame: truncated buffer");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(in[offset + b]) << (8 * b);
    return v;
}

}  // namespace

void validate(const CommParams& comm, const LtiPlant& plant) {
    if (!(comm.gamma > 0.0 && comm.gamma < 1.0)) {
        throw ConfigError("comm: gamma must lie in (0, 1), got " + std::to_string(comm.gamma));
    }
    validate(comm.state_quantizer());
    validate(comm.control_quantizer());
    if (comm.observer_gain.rows() != plant.n() || comm.observer_gain.cols() != plant.p()) {
        throw ConfigError("comm: observer gain G must be " + std::to_string(plant.n()) + "x" +
                          std::to_string(plant.p()));
    }
    numerics::require_finite(comm.observer_gain, "comm.G");
}

int bits_per_channel_step(const CommParams& comm, const LtiPlant& plant) {
    return bits_per_symbol(comm.state_quantizer()) * static_cast<int>(plant.p()) +
           bits_per_symbol(comm.control_quantizer()) * static_cast<int>(plant.m());
}

Encoder::Encoder(const LtiPlant& plant, const CommParams& comm, std::uint32_t sender,
                 Vector x_hat0, Vector u_hat0, CodecMode mode)
    : plant_(plant),
      comm_(comm),
      mode_(mode),
      state_(initial_state(plant, std::move(x_hat0), std::move(u_hat0))) {
    frame_.sender = sender;
}

StateEmission Encoder::emit_state_symbol(const Vector& y_prev) {
    if (mid_tick_) throw ProtocolError("encoder: state symbol emitted twice in one tick");
    if (y_prev.size() != plant_.p()) throw ConfigError("encoder: y has wrong dimension");
    StateEmission out;
    frame_.t = state_.t + 1;
    frame_.s.clear();
    frame_.s_u.clear();
    const Vector innovation = y_prev - plant_.c * state_.x_hat;
    if (mode_ == CodecMode::quantized) {
        out.scaled_innovation = innovation / state_.scale;
        auto q = quantize(comm_.state_quantizer(), out.scaled_innovation);
        out.error = q.errors;
        out.saturated = q.saturated_count;
        out.indices = q.indices;
        frame_.s = std::move(q.indices);
        frame_.raw_s = Vector();
    } else {
        out.scaled_innovation = innovation;
        out.error = Vector::Zero(innovation.size());
        frame_.raw_s = innovation;
    }
    advance_x_hat(plant_, comm_, mode_, state_, frame_);
    mid_tick_ = true;
    return out;
}

ControlEmission Encoder::emit_control_symbol(const Vector& u_now) {
    if (!mid_tick_) throw ProtocolError("encoder: control symbol before state symbol");
    if (u_now.size() != plant_.m()) throw ConfigError("encoder: u has wrong dimension");
    ControlEmission out;
    if (mode_ == CodecMode::quantized) {
        out.scaled_innovation = (u_now - state_.u_hat) / state_.scale;
        auto q = quantize(comm_.control_quantizer(), out.scaled_innovation);
        out.error = q.errors;
        out.saturated = q.saturated_count;
        out.indices = q.indices;
        frame_.s_u = std::move(q.indices);
        frame_.raw_s_u = Vector();
    } else {
        out.scaled_innovation = u_now - state_.u_hat;
        out.error = Vector::Zero(u_now.size());
        frame_.raw_s_u = u_now;
    }
    advance_u_hat(comm_, mode_, state_, frame_);
    close_tick(comm_, mode_, state_);
    mid_tick_ = false;
    return out;
}

Decoder::Decoder(const LtiPlant& plant, const CommParams& comm, std::uint32_t sender,
                 Vector x_hat0, Vector u_hat0, CodecMode mode)
    : plant_(plant),
      comm_(comm),
      sender_(sender),
      mode_(mode),
      state_(initial_state(plant, std::move(x_hat0), std::move(u_hat0))) {}

void Decoder::apply(const SymbolFrame& frame) {
    apply_state(frame);
    apply_control(frame);
}

void Decoder::apply_state(const SymbolFrame& frame) {
    if (mid_tick_) throw ProtocolError("decoder: state symbols applied twice in one tick");
    if (frame.sender != sender_) {
        throw ProtocolError("decoder: frame from agent " + std::to_string(frame.sender) +
                            " on the channel of agent " + std::to_string(sender_));
    }
    if (frame.t != state_.t + 1) {
        throw ProtocolError("decoder: expected frame t=" + std::to_string(state_.t + 1) +
                            ", got t=" + std::to_string(frame.t));
    }
    const auto p = static_cast<std::size_t>(plant_.p());
    if (mode_ == CodecMode::quantized) {
        if (frame.s.size() != p) throw ProtocolError("decoder: state symbol count mismatch");
        for (auto i : frame.s) {
            if (i < -comm_.levels_y || i > comm_.levels_y) {
                throw ProtocolError("decoder: state index out of range");
            }
        }
    } else if (static_cast<std::size_t>(frame.raw_s.size()) != p) {
        throw ProtocolError("decoder: precise payload size mismatch");
    }
    advance_x_hat(plant_, comm_, mode_, state_, frame);
    mid_tick_ = true;
}

void Decoder::apply_control(const SymbolFrame& frame) {
    if (!mid_tick_) throw ProtocolError("decoder: control symbols before state symbols");
    if (frame.sender != sender_ || frame.t != state_.t + 1) {
        throw ProtocolError("decoder: control symbols belong to a different frame");
    }
    const auto m = static_cast<std::size_t>(plant_.m());
    if (mode_ == CodecMode::quantized) {
        if (frame.s_u.size() != m) throw ProtocolError("decoder: control symbol count mismatch");
        for (auto i : frame.s_u) {
            if (i < -comm_.levels_u || i > comm_.levels_u) {
                throw ProtocolError("decoder: control index out of range");
            }
        }
    } else if (static_cast<std::size_t>(frame.raw_s_u.size()) != m) {
        throw ProtocolError("decoder: precise payload size mismatch");
    }
    advance_u_hat(comm_, mode_, state_, frame);
    close_tick(comm_, mode_, state_);
    mid_tick_ = false;
}

std::size_t frame_size(std::size_t p, std::size_t m) { return 8 + 4 + 2 * (p + m); }

std::vector<std::uint8_t> encode_frame(const SymbolFrame& frame, std::int64_t levels_y,
                                       std::int64_t levels_u) {
    std::vector<std::uint8_t> out;
    out.reserve(frame_size(frame.s.size(), frame.s_u.size()));
    put_le(out, frame.t, 8);
    put_le(out, frame.sender, 4);
    for (auto i : frame.s) append_index(out, i, levels_y);
    for (auto i : frame.s_u) append_index(out, i, levels_u);
    return out;
}

SymbolFrame decode_frame(std::span<const std::uint8_t> bytes, std::size_t p, std::size_t m,
                         std::int64_t levels_y, std::int64_t levels_u) {
    if (bytes.size() < frame_size(p, m)) throw ProtocolError("frame: truncated buffer");
    SymbolFrame f;
    f.t = get_le(bytes, 0, 8);
    f.sender = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
    std::size_t off = 12;
    for (std::size_t k = 0; k < p; ++k, off += 2) f.s.push_back(read_index(bytes, off, levels_y));
    for (std::size_t k = 0; k < m; ++k, off += 2) f.s_u.push_back(read_index(bytes, off, levels_u));
    return f;
}

}  // namespace qcoop
