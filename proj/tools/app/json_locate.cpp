#include "json_locate.hpp"

#include <vector>

namespace qcoop::app {

namespace {

std::vector<std::string> split_pointer(const std::string& pointer) {
    std::vector<std::string> tokens;
    if (pointer.empty()) return tokens;
    std::size_t pos = 1;
    while (pos <= pointer.size()) {
        const std::size_t next = pointer.find('/', pos);
        std::string raw = pointer.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        std::string token;
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw[k] == '~' && k + 1 < raw.size()) {
                token += raw[k + 1] == '1' ? '/' : '~';
                ++k;
            } else {
                token += raw[k];
            }
        }
        tokens.push_back(std::move(token));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return tokens;
}

// Minimal scanner over text already accepted by the JSON parser.
class Scanner {
public:
    explicit Scanner(std::string_view text) : s_(text) {}

    std::size_t seek(const std::vector<std::string>& tokens) {
        skip_ws();
        std::size_t best = i_;
        for (const std::string& token : tokens) {
            if (!enter(token)) break;
            skip_ws();
            best = i_;
        }
        return best;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;

    bool done() const { return i_ >= s_.size(); }

    void skip_ws() {
        while (!done() && (s_[i_] == ' ' || s_[i_] == '\n' || s_[i_] == '\r' || s_[i_] == '\t')) ++i_;
    }

    std::string read_string() {
        std::string out;
        ++i_;  // opening quote
        while (!done() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
                out += s_[i_ + 1];
                i_ += 2;
            } else {
                out += s_[i_++];
            }
        }
        ++i_;
        return out;
    }

    void skip_value() {
        skip_ws();
        if (done()) return;
        const char c = s_[i_];
        if (c == '"') {
            read_string();
        } else if (c == '{' || c == '[') {
            int depth = 0;
            while (!done()) {
                const char d = s_[i_];
                if (d == '"') {
                    read_string();
                    continue;
                }
                if (d == '{' || d == '[') ++depth;
                if (d == '}' || d == ']') --depth;
                ++i_;
                if (depth == 0) break;
            }
        } else {
            while (!done() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' &&
                   s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t') {
                ++i_;
            }
        }
    }

    // Moves to the child `token` of the value at i_; false if absent.
    bool enter(const std::string& token) {
        if (done()) return false;
        if (s_[i_] == '{') {
            ++i_;
            for (;;) {
                skip_ws();
                if (done() || s_[i_] == '}') return false;
                const std::string key = read_string();
                skip_ws();
                ++i_;  // ':'
                skip_ws();
                if (key == token) return true;
                skip_value();
                skip_ws();
                if (!done() && s_[i_] == ',') ++i_;
            }
        }
        if (s_[i_] == '[') {
            std::size_t want = 0;
            try {
                want = std::stoul(token);
            } catch (...) {
                return false;
            }
            ++i_;
            for (std::size_t idx = 0;; ++idx) {
                skip_ws();
                if (done() || s_[i_] == ']') return false;
                if (idx == want) return true;
                skip_value();
                skip_ws();
                if (!done() && s_[i_] == ',') ++i_;
            }
        }
        return false;
    }
};

}  // namespace

TextPosition position_of_offset(std::string_view text, std::size_t offset) {
    TextPosition pos;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++pos.line;
            pos.column = 1;
        } else {
            ++pos.column;
        }
    }
    return pos;
}

TextPosition locate_pointer(std::string_view text, const std::string& pointer) {
    Scanner scanner(text);
    return position_of_offset(text, scanner.seek(split_pointer(pointer)));
}

}  // namespace qcoop::app
