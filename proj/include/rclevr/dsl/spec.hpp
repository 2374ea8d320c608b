#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rclevr/core/error.hpp"
#include "rclevr/scm/graph.hpp"

namespace rclevr::dsl {

struct SourcePos {
  int line = 1;
  int column = 1;
  auto operator<=>(const SourcePos&) const = default;
};

enum class ParseErrorKind {
  Syntax,
  UnknownOperator,
  UnknownParent,
  DuplicateNode,
  AcyclicityViolation,
  ArityError,
};

std::string_view to_string(ParseErrorKind kind) noexcept;

/// First error found while parsing a spec. what() reads "line:col: kind: message".
class ParseError : public SpecError {
 public:
  ParseError(ParseErrorKind kind, SourcePos pos, std::string message, std::vector<std::string> expected = {});

  ParseErrorKind kind() const noexcept { return kind_; }
  SourcePos pos() const noexcept { return pos_; }
  const std::string& message() const noexcept { return message_; }
  /// Tokens that would have been accepted at pos (syntax errors only).
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  ParseErrorKind kind_;
  SourcePos pos_;
  std::string message_;
  std::vector<std::string> expected_;
};

struct SpecDocument {
  std::string source_text;
  int version = 1;
  scm::CausalGraph graph;
  std::map<std::string, SourcePos, std::less<>> node_pos;
  std::map<std::pair<std::string, std::string>, SourcePos> param_pos;
};

SpecDocument parse_spec(std::string_view text);

/// Reads and parses a `.scm.txt` file. Throws IoError or ParseError.
SpecDocument load_spec(const std::string& path);

/// Canonical text: nodes in topological order, parameters in operator order.
std::string serialize_spec(const scm::CausalGraph& graph);

enum class DiagnosticLevel { Warning, Error };

struct Diagnostic {
  DiagnosticLevel level;
  SourcePos pos;
  std::string node;
  std::string param;
  std::string message;
};

/// Parses a single distribution such as `uniform(0, 0.1)`. Throws ParseError.
scm::Distribution parse_distribution(std::string_view text);

/// Checks every parameter's reachable support against its operator domain.
/// Bounded supports leaving the domain are errors; unbounded tails are
/// warnings because the value is clamped when the operator is built.
std::vector<Diagnostic> validate_spec(const SpecDocument& doc);

std::string format_diagnostic(const Diagnostic& d);

}  // namespace rclevr::dsl
