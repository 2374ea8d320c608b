#include "lexer.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace rclevr::dsl::detail {
namespace {

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

constexpr std::array<std::string_view, 5> kTwoCharPunct{"..", "<=", ">=", "==", "!="};
constexpr std::string_view kOneCharPunct = "{}();,=~.*+-:<>";

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  SourcePos pos;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    const SourcePos start = pos;
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      out.push_back({TokenKind::Ident, std::string(text.substr(i, j - i)), 0.0, start});
      advance(j - i);
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          while (k < text.size() && is_digit(text[k])) ++k;
          j = k;
        }
      }
      const std::string_view lexeme = text.substr(i, j - i);
      double value = 0.0;
      const auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
      if (res.ec != std::errc() || !std::isfinite(value)) {
        throw ParseError(ParseErrorKind::Syntax, start, "number '" + std::string(lexeme) + "' is out of range");
      }
      out.push_back({TokenKind::Number, std::string(lexeme), value, start});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (auto p : kTwoCharPunct) {
      if (text.substr(i, 2) == p) {
        out.push_back({TokenKind::Punct, std::string(p), 0.0, start});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kOneCharPunct.find(c) != std::string_view::npos) {
      out.push_back({TokenKind::Punct, std::string(1, c), 0.0, start});
      advance(1);
      continue;
    }
    std::string shown;
    const auto byte = static_cast<unsigned char>(c);
    if (byte >= 0x20 && byte < 0x7f) {
      shown = std::string("'") + c + "'";
    } else {
      static constexpr char kHex[] = "0123456789abcdef";
      shown = std::string("byte 0x") + kHex[byte >> 4] + kHex[byte & 0xf];
    }
    throw ParseError(ParseErrorKind::Syntax, start, "unexpected character " + shown);
  }
  out.push_back({TokenKind::End, "", 0.0, pos});
  return out;
}

}  // namespace rclevr::dsl::detail
