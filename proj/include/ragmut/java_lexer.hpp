#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "ragmut/error.hpp"

namespace ragmut::java {

enum class TokenKind { Identifier, Keyword, Number, String, Char, Operator, End };

struct Token {
    TokenKind kind;
    std::string text;
    int line;     // 1-based line of the first character
    int end_line; // 1-based line of the last character (text blocks span lines)

    bool is(std::string_view s) const { return (kind == TokenKind::Operator || kind == TokenKind::Keyword) && text == s; }
    bool is_ident() const { return kind == TokenKind::Identifier; }
};

namespace detail {

inline bool is_keyword(std::string_view w) {
    static constexpr std::array<std::string_view, 53> kw = {
        "abstract", "assert",     "boolean",   "break",     "byte",      "case",      "catch",
        "char",     "class",      "const",     "continue",  "default",   "do",        "double",
        "else",     "enum",       "extends",   "final",     "finally",   "float",     "for",
        "goto",     "if",         "implements", "import",   "instanceof", "int",      "interface",
        "long",     "native",     "new",       "package",   "private",   "protected", "public",
        "return",   "short",      "static",    "strictfp",  "super",     "switch",    "synchronized",
        "this",     "throw",      "throws",    "transient", "try",       "void",      "volatile",
        "while",    "true",       "false",     "null"};
    for (auto k : kw)
        if (k == w) return true;
    return false;
}

inline bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' || static_cast<unsigned char>(c) >= 0x80;
}
inline bool ident_part(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

// Longest first.
inline constexpr std::array<std::string_view, 50> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=",   "-=",  "*=",  "/=",  "&=",  "|=", "^=", "%=", "<<", ">>", "(",  ")",  "{",  "}",  "[",
    "]",    ";",   ",",   ".",   "@",   "=",  ">",  "<",  "!",  "~",  "?",  ":",  "+",  "-",  "*",
    "/",    "&",   "|",   "^",   "%"};

} // namespace detail

/// Tokenizes Java source. Comments and whitespace are dropped; line numbers
/// are preserved. `first_line` is the number given to the first line.
inline std::vector<Token> tokenize(std::string_view src, int first_line = 1) {
    std::vector<Token> out;
    int line = first_line;
    std::size_t i = 0;
    const std::size_t n = src.size();
    auto peek = [&](std::size_t k) -> char { return i + k < n ? src[i + k] : '\0'; };

    while (i < n) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '/' && peek(1) == '/') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && peek(1) == '*') {
            const int start = line;
            i += 2;
            while (i < n && !(src[i] == '*' && peek(1) == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            if (i >= n) throw SyntaxError("unterminated comment", start);
            i += 2;
            continue;
        }
        if (c == '"' && peek(1) == '"' && peek(2) == '"') {
            const int start = line;
            std::size_t j = i + 3;
            while (j < n && !(src[j] == '"' && j + 2 < n && src[j + 1] == '"' && src[j + 2] == '"')) {
                if (src[j] == '\\') ++j;
                else if (src[j] == '\n') ++line;
                ++j;
            }
            if (j >= n) throw SyntaxError("unterminated text block", start);
            out.push_back({TokenKind::String, std::string(src.substr(i, j + 3 - i)), start, line});
            i = j + 3;
            continue;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = i + 1;
            while (j < n && src[j] != c) {
                if (src[j] == '\n') throw SyntaxError("unterminated literal", line);
                if (src[j] == '\\') ++j;
                ++j;
            }
            if (j >= n) throw SyntaxError("unterminated literal", line);
            out.push_back({c == '"' ? TokenKind::String : TokenKind::Char, std::string(src.substr(i, j + 1 - i)), line, line});
            i = j + 1;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            std::size_t j = i;
            while (j < n) {
                char d = src[j];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
                    ++j;
                } else if ((d == '+' || d == '-') && j > i && (src[j - 1] == 'e' || src[j - 1] == 'E' || src[j - 1] == 'p' || src[j - 1] == 'P') &&
                           !(src[i] == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X') && (src[j - 1] == 'e' || src[j - 1] == 'E'))) {
                    ++j;
                } else {
                    break;
                }
            }
            out.push_back({TokenKind::Number, std::string(src.substr(i, j - i)), line, line});
            i = j;
            continue;
        }
        if (detail::ident_start(c)) {
            std::size_t j = i;
            while (j < n && detail::ident_part(src[j])) ++j;
            std::string word(src.substr(i, j - i));
            auto kind = detail::is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier;
            out.push_back({kind, std::move(word), line, line});
            i = j;
            continue;
        }
        bool matched = false;
        for (auto op : detail::kOperators) {
            if (src.substr(i, op.size()) == op) {
                out.push_back({TokenKind::Operator, std::string(op), line, line});
                i += op.size();
                matched = true;
                break;
            }
        }
        if (!matched) throw SyntaxError(std::string("unexpected character '") + c + "'", line);
    }
    out.push_back({TokenKind::End, "", line, line});
    return out;
}

} // namespace ragmut::java
