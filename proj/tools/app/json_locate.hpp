#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace qcoop::app {

struct TextPosition {
    std::size_t line = 1;    // 1-based
    std::size_t column = 1;  // 1-based, in bytes
};

TextPosition position_of_offset(std::string_view text, std::size_t offset);

// Position of the value addressed by an RFC 6901 pointer inside well-formed
// JSON text. Falls back to the deepest existing ancestor.
TextPosition locate_pointer(std::string_view text, const std::string& pointer);

}  // namespace qcoop::app
