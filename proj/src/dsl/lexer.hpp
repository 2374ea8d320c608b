#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rclevr/dsl/spec.hpp"

namespace rclevr::dsl::detail {

enum class TokenKind { Ident, Number, Punct, End };

struct Token {
  TokenKind kind;
  std::string text;
  double number = 0.0;
  SourcePos pos;
};

/// Splits spec text into tokens. Throws ParseError(Syntax) on bad input.
std::vector<Token> tokenize(std::string_view text);

}  // namespace rclevr::dsl::detail
