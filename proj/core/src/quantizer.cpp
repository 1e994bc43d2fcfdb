#include "qcoop/quantizer.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "qcoop/error.hpp"

namespace qcoop {

namespace {

constexpr std::int64_t kWireIndexLimit = 32767;

// Bin index for y >= 0 before clamping. Edges are the doubles (i + 0.5) * p,
// evaluated identically on every IEEE-754 platform.
std::int64_t nonnegative_bin(double y, double step, std::int64_t levels) {
    const double clamp_edge = (static_cast<double>(levels) - 0.5) * step;
    if (y >= clamp_edge) return levels;
    auto i = static_cast<std::int64_t>(std::floor(y / step + 0.5));
    if (i < 0) i = 0;
    if (i > levels) i = levels;
    while (i > 0 && y < (static_cast<double>(i) - 0.5) * step) --i;
    while (i < levels && y >= (static_cast<double>(i) + 0.5) * step) ++i;
    return i;
}

}  // namespace

void validate(const QuantizerSpec& spec) {
    if (!(spec.step > 0.0 && spec.step <= 1.0)) {
        throw ConfigError("quantizer: step must lie in (0, 1], got " + std::to_string(spec.step));
    }
    if (spec.levels < 1) {
        throw ConfigError("quantizer: levels must be >= 1, got " + std::to_string(spec.levels));
    }
}

QuantOutcome quantize(const QuantizerSpec& spec, double y) {
    if (!std::isfinite(y)) throw ConfigError("quantize: non-finite input");
    const double half = spec.step / 2.0;
    QuantOutcome out;
    out.index = y < -half ? -nonnegative_bin(-y, spec.step, spec.levels)
                          : nonnegative_bin(y, spec.step, spec.levels);
    out.value = static_cast<double>(out.index) * spec.step;
    out.error = y - out.value;
    out.saturated = std::abs(y) > (static_cast<double>(spec.levels) + 0.5) * spec.step;
    return out;
}

VectorQuantOutcome quantize(const QuantizerSpec& spec, const Vector& y) {
    VectorQuantOutcome out;
    out.indices.resize(static_cast<std::size_t>(y.size()));
    out.values.resize(y.size());
    out.errors.resize(y.size());
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        const QuantOutcome q = quantize(spec, y(k));
        out.indices[static_cast<std::size_t>(k)] = q.index;
        out.values(k) = q.value;
        out.errors(k) = q.error;
        if (q.saturated) ++out.saturated_count;
    }
    return out;
}

int bits_per_symbol(const QuantizerSpec& spec) {
    // 2M+1 symbols need bit_width(2M) bits.
    return static_cast<int>(std::bit_width(static_cast<std::uint64_t>(2 * spec.levels)));
}

void append_index(std::vector<std::uint8_t>& out, std::int64_t index, std::int64_t bound) {
    if (bound > kWireIndexLimit) {
        throw ProtocolError("frame: level count " + std::to_string(bound) +
                            " exceeds the int16 wire range");
    }
    if (index < -bound || index > bound) {
        throw ProtocolError("frame: index " + std::to_string(index) + " outside [-" +
                            std::to_string(bound) + ", " + std::to_string(bound) + "]");
    }
    const auto raw = static_cast<std::uint16_t>(static_cast<std::int16_t>(index));
    out.push_back(static_cast<std::uint8_t>(raw & 0xFFu));
    out.push_back(static_cast<std::uint8_t>(raw >> 8));
}

std::int64_t read_index(std::span<const std::uint8_t> in, std::size_t offset, std::int64_t bound) {
    if (offset + 2 > in.size()) throw ProtocolError("frame: truncated buffer");
    const auto raw = static_cast<std::uint16_t>(in[offset] | (in[offset + 1] << 8));
    const std::int64_t index = static_cast<std::int16_t>(raw);
    if (index < -bound || index > bound) {
        throw ProtocolError("frame: decoded index " + std::to_string(index) +
                            " outside the declared range");
    }
    return index;
}

}  // namespace qcoop
