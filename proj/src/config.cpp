#include "varnews/config.hpp"

#include "varnews/common.hpp"

#include <cctype>
#include <charconv>

namespace varnews::config {

namespace {

class Parser {
public:
    Parser(std::string_view text, const std::string& source) : text_(text), source_(source) {}

    nlohmann::json run() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                const std::string key = parse_key();
                skip_spaces();
                expect('=');
                skip_spaces();
                nlohmann::json value = parse_value();
                if (table->contains(key)) fail("duplicate key '" + key + "'");
                (*table)[key] = std::move(value);
            }
            end_of_line();
        }
        return root;
    }

private:
    std::string_view text_;
    const std::string& source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;

    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError(source_ + ":" + std::to_string(line_) + ": " + what);
    }
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }
    char take() {
        const char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        take();
    }
    void skip_spaces() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) take();
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') take();
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r') take();
            if (peek() == '\n') {
                take();
                continue;
            }
            break;
        }
    }
    // Whitespace, comments and newlines inside arrays.
    void skip_array_filler() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                take();
                continue;
            }
            break;
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') take();
        if (!eof() && peek() != '\n') fail("unexpected text after value");
        if (!eof()) take();
    }

    nlohmann::json& open_table(nlohmann::json& root) {
        expect('[');
        skip_spaces();
        nlohmann::json* t = &root;
        while (true) {
            const std::string part = parse_key();
            auto& next = (*t)[part];
            if (next.is_null()) next = nlohmann::json::object();
            if (!next.is_object()) fail("'" + part + "' is not a table");
            t = &next;
            skip_spaces();
            if (peek() == '.') {
                take();
                skip_spaces();
                continue;
            }
            break;
        }
        expect(']');
        return *t;
    }

    std::string parse_key() {
        if (peek() == '"') return parse_string();
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) key += take();
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = take();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                c = take();
                switch (c) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape \\") + c);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    nlohmann::json parse_value() {
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        std::string token;
        while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' && peek() != '\r' &&
               peek() != ' ' && peek() != '\t') {
            token += take();
        }
        if (token.empty()) fail("expected a value");
        if (token == "true") return true;
        if (token == "false") return false;
        std::int64_t i = 0;
        auto [ip, iec] = std::from_chars(token.data(), token.data() + token.size(), i);
        if (iec == std::errc() && ip == token.data() + token.size()) return i;
        double d = 0.0;
        const char* first = token.data();
        if (*first == '+') ++first;
        auto [dp, dec] = std::from_chars(first, token.data() + token.size(), d);
        if (dec == std::errc() && dp == token.data() + token.size()) return d;
        fail("cannot parse value '" + token + "'");
    }

    nlohmann::json parse_array() {
        expect('[');
        nlohmann::json arr = nlohmann::json::array();
        skip_array_filler();
        while (peek() != ']') {
            if (eof()) fail("unterminated array");
            arr.push_back(parse_value());
            skip_array_filler();
            if (peek() == ',') {
                take();
                skip_array_filler();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
        take();
        return arr;
    }
};

}  // namespace

nlohmann::json parse_toml(std::string_view text, const std::string& source_name) {
    return Parser(text, source_name).run();
}

}  // namespace varnews::config
