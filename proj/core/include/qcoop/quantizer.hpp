#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qcoop/numerics.hpp"

namespace qcoop {

// Uniform quantizer with step p in (0, 1] and M one-sided levels; the
// alphabet is the 2M+1 indices -M..M and the output value is index * step.
struct QuantizerSpec {
    double step = 1.0;
    std::int64_t levels = 1;
};

// Throws ConfigError unless 0 < step <= 1 and levels >= 1.
void validate(const QuantizerSpec& spec);

struct QuantOutcome {
    std::int64_t index = 0;
    double value = 0.0;  // index * step, exactly
    double error = 0.0;  // input - value
    bool saturated = false;
};

// Half-open bins [ip - p/2, ip + p/2) on the nonnegative side, clamped at M,
// extended to y < -p/2 as -Q(-y). Throws ConfigError on non-finite input.
QuantOutcome quantize(const QuantizerSpec& spec, double y);

struct VectorQuantOutcome {
    std::vector<std::int64_t> indices;
    Vector values;
    Vector errors;
    std::size_t saturated_count = 0;
};

VectorQuantOutcome quantize(const QuantizerSpec& spec, const Vector& y);

// ceil(log2(2M + 1)).
int bits_per_symbol(const QuantizerSpec& spec);

// Little-endian int16 wire encoding of one index; |index| <= bound <= 32767.
void append_index(std::vector<std::uint8_t>& out, std::int64_t index, std::int64_t bound);
std::int64_t read_index(std::span<const std::uint8_t> in, std::size_t offset, std::int64_t bound);

}  // namespace qcoop
