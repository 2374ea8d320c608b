#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lexer.hpp"
#include "rclevr/dsl/spec.hpp"

namespace rclevr::dsl {

using detail::Token;
using detail::TokenKind;

std::string_view to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::Syntax: return "SyntaxError";
    case ParseErrorKind::UnknownOperator: return "UnknownOperator";
    case ParseErrorKind::UnknownParent: return "UnknownParent";
    case ParseErrorKind::DuplicateNode: return "DuplicateNode";
    case ParseErrorKind::AcyclicityViolation: return "AcyclicityViolation";
    case ParseErrorKind::ArityError: return "ArityError";
  }
  return "SyntaxError";
}

namespace {

std::string render_error(ParseErrorKind kind, SourcePos pos, const std::string& message,
                         const std::vector<std::string>& expected) {
  std::ostringstream os;
  os << pos.line << ':' << pos.column << ": " << to_string(kind) << ": " << message;
  if (!expected.empty()) {
    os << " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
    os << ')';
  }
  return os.str();
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, SourcePos pos, std::string message, std::vector<std::string> expected)
    : SpecError(render_error(kind, pos, message, expected)),
      kind_(kind),
      pos_(pos),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

namespace {

const std::set<std::string, std::less<>> kReserved{"node", "after", "render_from", "op",  "eps",     "if",
                                                   "then", "elif",  "else",        "or",  "and",     "version",
                                                   "clean", "parent"};

struct RefUse {
  scm::ParentRef ref;
  SourcePos pos;
};

struct EpsUse {
  std::string name;
  SourcePos pos;
};

struct RawNode {
  scm::CorruptionNode node;
  SourcePos pos;
  bool has_op = false;
  bool explicit_render_from = false;
  SourcePos render_pos;
  std::vector<SourcePos> parent_pos;
  std::map<std::string, SourcePos> param_pos;
  std::map<std::string, SourcePos> eps_pos;
  std::vector<RefUse> refs;
  std::vector<EpsUse> eps_uses;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  int parse_version() {
    if (!at_ident("version")) return 1;
    advance();
    const Token& t = peek();
    if (t.kind != TokenKind::Number || t.number != 1.0) {
      throw ParseError(ParseErrorKind::Syntax, t.pos, "unsupported format version '" + t.text + "'", {"1"});
    }
    advance();
    expect_punct(";");
    return 1;
  }

  std::vector<RawNode> parse_nodes() {
    std::vector<RawNode> nodes;
    while (peek().kind != TokenKind::End) {
      if (!at_ident("node")) fail({"'node'", "end of input"});
      nodes.push_back(parse_node());
    }
    return nodes;
  }

  scm::Distribution parse_lone_dist() {
    scm::Distribution d = parse_dist();
    if (peek().kind != TokenKind::End) fail({"end of input"});
    return d;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  const Token& advance() { return toks_[std::min(i_++, toks_.size() - 1)]; }

  bool at_punct(std::string_view p) const { return peek().kind == TokenKind::Punct && peek().text == p; }
  bool at_ident(std::string_view word) const { return peek().kind == TokenKind::Ident && peek().text == word; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    const std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(ParseErrorKind::Syntax, t.pos, "unexpected " + found, std::move(expected));
  }

  const Token& expect_punct(std::string_view p) {
    if (!at_punct(p)) fail({"'" + std::string(p) + "'"});
    return advance();
  }

  const Token& expect_keyword(std::string_view word) {
    if (!at_ident(word)) fail({"'" + std::string(word) + "'"});
    return advance();
  }

  const Token& expect_name(const std::string& what) {
    if (peek().kind != TokenKind::Ident || kReserved.contains(peek().text)) fail({what});
    return advance();
  }

  double parse_number() {
    double sign = 1.0;
    while (at_punct("-") || at_punct("+")) {
      if (advance().text == "-") sign = -sign;
    }
    if (peek().kind != TokenKind::Number) fail({"number"});
    return sign * advance().number;
  }

  RawNode parse_node() {
    RawNode raw;
    expect_keyword("node");
    const Token& name = expect_name("node name");
    raw.node.name = name.text;
    raw.pos = name.pos;
    if (at_ident("after")) {
      advance();
      do {
        const Token& parent = expect_name("parent node name");
        raw.node.parents.push_back(parent.text);
        raw.parent_pos.push_back(parent.pos);
      } while (at_punct(",") && (advance(), true));
    }
    if (at_ident("render_from")) {
      raw.render_pos = advance().pos;
      raw.explicit_render_from = true;
      if (at_ident("parent")) {
        raw.node.render_from = scm::RenderFrom::Parent;
      } else if (at_ident("clean")) {
        raw.node.render_from = scm::RenderFrom::Clean;
      } else {
        fail({"'parent'", "'clean'"});
      }
      advance();
    }
    if (!raw.explicit_render_from) raw.node.render_from = scm::default_render_from(raw.node);
    if (!at_punct("{")) {
      std::vector<std::string> expected{"'{'"};
      if (raw.node.parents.empty() && !raw.explicit_render_from) expected.push_back("'after'");
      if (!raw.explicit_render_from) expected.push_back("'render_from'");
      fail(expected);
    }
    advance();
    while (!at_punct("}")) parse_statement(raw);
    advance();
    return raw;
  }

  void parse_statement(RawNode& raw) {
    if (at_ident("op")) {
      const Token& kw = advance();
      if (raw.has_op) throw ParseError(ParseErrorKind::Syntax, kw.pos, "operator declared twice");
      expect_punct("=");
      if (peek().kind != TokenKind::Ident) fail({"operator name"});
      const Token& op = advance();
      const auto id = ops::operator_from_name(op.text);
      if (!id) {
        throw ParseError(ParseErrorKind::UnknownOperator, op.pos, "unknown operator '" + op.text + "'");
      }
      raw.node.op = *id;
      raw.has_op = true;
      expect_punct(";");
      return;
    }
    if (at_ident("eps")) {
      advance();
      const Token& name = expect_name("exogenous term name");
      if (raw.eps_pos.contains(name.text)) {
        throw ParseError(ParseErrorKind::Syntax, name.pos, "exogenous term '" + name.text + "' declared twice");
      }
      expect_punct("~");
      raw.node.exogenous.push_back({name.text, parse_dist()});
      raw.eps_pos[name.text] = name.pos;
      expect_punct(";");
      return;
    }
    if (at_punct("}")) return;
    if (peek().kind != TokenKind::Ident || kReserved.contains(peek().text)) {
      fail({"'op'", "'eps'", "parameter name", "'}'"});
    }
    const Token& name = advance();
    if (raw.param_pos.contains(name.text)) {
      throw ParseError(ParseErrorKind::ArityError, name.pos, "parameter '" + name.text + "' assigned twice");
    }
    // `param ~ dist;` is shorthand for `param = ~ dist;`.
    if (at_punct("=")) {
      advance();
    } else if (!at_punct("~")) {
      fail({"'='", "'~'"});
    }
    scm::Expr expr = parse_mech(raw);
    expect_punct(";");
    raw.node.params.push_back({name.text, scm::Mechanism{std::move(expr)}});
    raw.param_pos[name.text] = name.pos;
  }

  scm::Expr parse_mech(RawNode& raw) {
    if (at_punct("~")) {
      advance();
      return scm::Expr{scm::Draw{parse_dist(), 0}};
    }
    if (at_ident("if")) return parse_branch(raw);
    if (at_punct("(")) {
      advance();
      scm::Expr inner = parse_mech(raw);
      expect_punct(")");
      return inner;
    }
    return scm::Expr{parse_affine(raw)};
  }

  scm::Expr parse_branch(RawNode& raw) {
    expect_keyword("if");
    scm::Branch branch;
    while (true) {
      scm::Condition cond = parse_or(raw);
      expect_keyword("then");
      scm::Expr then = parse_mech(raw);
      branch.arms.push_back({std::move(cond), std::move(then)});
      if (!at_ident("elif")) break;
      advance();
    }
    if (at_ident("else")) {
      advance();
      branch.otherwise.push_back(parse_mech(raw));
    }
    return scm::Expr{std::move(branch)};
  }

  void parse_term(RawNode& raw, double sign, scm::Affine& out) {
    while (at_punct("-") || at_punct("+")) {
      if (advance().text == "-") sign = -sign;
    }
    if (peek().kind == TokenKind::Number) {
      const double v = sign * advance().number;
      if (at_punct("*")) {
        advance();
        out.terms.push_back({v, parse_eps_ref(raw)});
      } else {
        out.offset += v;
      }
      return;
    }
    if (at_ident("eps")) {
      out.terms.push_back({sign, parse_eps_ref(raw)});
      return;
    }
    fail({"number", "'eps'", "'~'", "'if'", "'('"});
  }

  scm::Affine parse_affine(RawNode& raw) {
    scm::Affine out;
    parse_term(raw, 1.0, out);
    while (at_punct("+") || at_punct("-")) {
      const double sign = advance().text == "-" ? -1.0 : 1.0;
      parse_term(raw, sign, out);
    }
    return out;
  }

  std::string parse_eps_ref(RawNode& raw) {
    const SourcePos pos = expect_keyword("eps").pos;
    expect_punct("(");
    const Token& name = expect_name("exogenous term name");
    expect_punct(")");
    raw.eps_uses.push_back({name.text, pos});
    return name.text;
  }

  scm::Condition parse_or(RawNode& raw) {
    std::vector<scm::Condition> terms{parse_and(raw)};
    while (at_ident("or")) {
      advance();
      terms.push_back(parse_and(raw));
    }
    if (terms.size() == 1) return std::move(terms.front());
    return scm::Condition{scm::Junction{true, std::move(terms)}};
  }

  scm::Condition parse_and(RawNode& raw) {
    std::vector<scm::Condition> terms{parse_comparison(raw)};
    while (at_ident("and")) {
      advance();
      terms.push_back(parse_comparison(raw));
    }
    if (terms.size() == 1) return std::move(terms.front());
    return scm::Condition{scm::Junction{false, std::move(terms)}};
  }

  scm::Condition parse_comparison(RawNode& raw) {
    if (at_punct("(")) {
      advance();
      scm::Condition inner = parse_or(raw);
      expect_punct(")");
      return inner;
    }
    scm::Comparison cmp{scm::EpsRef{}, scm::CmpOp::Less, 0.0};
    if (at_ident("eps")) {
      cmp.lhs = scm::EpsRef{parse_eps_ref(raw)};
    } else {
      if (peek().kind != TokenKind::Ident || kReserved.contains(peek().text)) {
        fail({"parent parameter reference", "'eps'", "'('"});
      }
      const Token& node = advance();
      expect_punct(".");
      if (peek().kind != TokenKind::Ident) fail({"parameter name"});
      const Token& param = advance();
      scm::ParentRef ref{node.text, param.text};
      raw.refs.push_back({ref, node.pos});
      cmp.lhs = std::move(ref);
    }
    static const std::vector<std::pair<std::string_view, scm::CmpOp>> kOps{
        {"<", scm::CmpOp::Less},     {"<=", scm::CmpOp::LessEqual}, {">", scm::CmpOp::Greater},
        {">=", scm::CmpOp::GreaterEqual}, {"==", scm::CmpOp::Equal}, {"!=", scm::CmpOp::NotEqual}};
    bool found = false;
    for (const auto& [text, op] : kOps) {
      if (at_punct(text)) {
        cmp.op = op;
        found = true;
        break;
      }
    }
    if (!found) fail({"'<'", "'<='", "'>'", "'>='", "'=='", "'!='"});
    advance();
    cmp.rhs = parse_number();
    return scm::Condition{std::move(cmp)};
  }

  scm::Distribution parse_dist() {
    if (peek().kind != TokenKind::Ident) fail({"distribution"});
    const Token& head = advance();
    const std::string kind = head.text;
    auto guarded = [&](auto&& make) {
      try {
        return make();
      } catch (const InvalidDistribution& e) {
        throw ParseError(ParseErrorKind::Syntax, head.pos, e.what());
      }
    };
    if (kind == "uniform" || kind == "normal") {
      expect_punct("(");
      const double a = parse_number();
      expect_punct(",");
      const double b = parse_number();
      expect_punct(")");
      return guarded([&] { return kind == "uniform" ? scm::Distribution::uniform(a, b) : scm::Distribution::normal(a, b); });
    }
    if (kind == "halfnormal" || kind == "point") {
      expect_punct("(");
      const double a = parse_number();
      expect_punct(")");
      return guarded([&] { return kind == "point" ? scm::Distribution::point(a) : scm::Distribution::half_normal(a); });
    }
    if (kind == "discrete") {
      expect_punct("(");
      std::vector<double> values{parse_number()};
      if (at_punct("..")) {
        advance();
        const double hi = parse_number();
        const double lo = values.front();
        if (lo != std::floor(lo) || hi != std::floor(hi) || lo > hi || hi - lo > 1e6) {
          throw ParseError(ParseErrorKind::Syntax, head.pos, "discrete range needs integer bounds lo <= hi");
        }
        values.clear();
        for (double v = lo; v <= hi; v += 1.0) values.push_back(v);
      } else {
        while (at_punct(",")) {
          advance();
          values.push_back(parse_number());
        }
      }
      expect_punct(")");
      return guarded([&] { return scm::Distribution::discrete(std::move(values)); });
    }
    if (kind == "mixture") {
      expect_punct("(");
      std::vector<scm::MixtureComponent> components;
      do {
        const double w = parse_number();
        expect_punct(":");
        components.push_back({w, parse_dist()});
      } while (at_punct(",") && (advance(), true));
      expect_punct(")");
      return guarded([&] { return scm::Distribution::mixture(std::move(components)); });
    }
    throw ParseError(ParseErrorKind::Syntax, head.pos, "unknown distribution '" + kind + "'",
                     {"'uniform'", "'halfnormal'", "'normal'", "'discrete'", "'point'", "'mixture'"});
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

/// Semantic checks; collects every problem and reports the earliest.
void check_semantics(const std::vector<RawNode>& nodes) {
  std::vector<ParseError> errors;
  auto add = [&](ParseErrorKind kind, SourcePos pos, std::string msg) { errors.emplace_back(kind, pos, std::move(msg)); };

  std::map<std::string, const RawNode*> by_name;
  for (const auto& raw : nodes) {
    if (!by_name.emplace(raw.node.name, &raw).second) {
      add(ParseErrorKind::DuplicateNode, raw.pos, "node '" + raw.node.name + "' is already defined");
    }
  }
  for (const auto& raw : nodes) {
    const auto& node = raw.node;
    if (!raw.has_op) {
      add(ParseErrorKind::Syntax, raw.pos, "node '" + node.name + "' does not declare 'op'");
      continue;
    }
    std::set<std::string> parent_set;
    for (std::size_t i = 0; i < node.parents.size(); ++i) {
      const auto& p = node.parents[i];
      if (!by_name.contains(p)) {
        add(ParseErrorKind::UnknownParent, raw.parent_pos[i], "parent '" + p + "' is not a declared node");
      } else if (p == node.name) {
        add(ParseErrorKind::AcyclicityViolation, raw.parent_pos[i], "node '" + p + "' lists itself as parent");
      }
      if (!parent_set.insert(p).second) {
        add(ParseErrorKind::Syntax, raw.parent_pos[i], "parent '" + p + "' listed twice");
      }
    }
    if (raw.explicit_render_from && node.render_from == scm::RenderFrom::Parent && node.parents.size() != 1) {
      add(ParseErrorKind::ArityError, raw.render_pos, "render_from parent requires exactly one parent");
    }
    const auto& spec = ops::spec_of(node.op);
    for (const auto& p : node.params) {
      if (!ops::param_index(node.op, p.name)) {
        add(ParseErrorKind::ArityError, raw.param_pos.at(p.name),
            "operator " + std::string(spec.name) + " has no parameter '" + p.name + "'");
      }
    }
    for (const auto& required : spec.params()) {
      if (node.find_param(required.name) == nullptr) {
        add(ParseErrorKind::ArityError, raw.pos,
            "node '" + node.name + "' is missing parameter '" + std::string(required.name) + "' of operator " +
                std::string(spec.name));
      }
    }
    for (const auto& use : raw.refs) {
      if (!parent_set.contains(use.ref.node)) {
        add(ParseErrorKind::UnknownParent, use.pos,
            "'" + use.ref.node + "' is not a parent of node '" + node.name + "'");
        continue;
      }
      const auto it = by_name.find(use.ref.node);
      if (it == by_name.end() || !it->second->has_op) continue;
      if (!ops::param_index(it->second->node.op, use.ref.param)) {
        add(ParseErrorKind::UnknownParent, use.pos,
            "parent '" + use.ref.node + "' has no parameter '" + use.ref.param + "'");
      }
    }
    for (const auto& use : raw.eps_uses) {
      if (!raw.eps_pos.contains(use.name)) {
        add(ParseErrorKind::Syntax, use.pos, "exogenous term '" + use.name + "' is not declared in this node");
      }
    }
  }
  if (!errors.empty()) {
    throw *std::min_element(errors.begin(), errors.end(),
                            [](const ParseError& a, const ParseError& b) { return a.pos() < b.pos(); });
  }

  std::vector<scm::CorruptionNode> plain;
  for (const auto& raw : nodes) plain.push_back(raw.node);
  try {
    (void)scm::topological_order(std::span<const scm::CorruptionNode>(plain));
  } catch (const CyclicGraph& e) {
    SourcePos pos = by_name.at(e.cycle().front())->pos;
    for (const auto& name : e.cycle()) pos = std::min(pos, by_name.at(name)->pos);
    throw ParseError(ParseErrorKind::AcyclicityViolation, pos, e.what());
  }
}

}  // namespace

SpecDocument parse_spec(std::string_view text) {
  Parser parser(detail::tokenize(text));
  const int version = parser.parse_version();
  std::vector<RawNode> raw = parser.parse_nodes();
  check_semantics(raw);

  std::vector<scm::CorruptionNode> nodes;
  std::map<std::string, SourcePos, std::less<>> node_pos;
  std::map<std::pair<std::string, std::string>, SourcePos> param_pos;
  for (auto& r : raw) {
    node_pos[r.node.name] = r.pos;
    for (const auto& [param, pos] : r.param_pos) param_pos[{r.node.name, param}] = pos;
    nodes.push_back(std::move(r.node));
  }
  try {
    return SpecDocument{std::string(text), version, scm::CausalGraph(std::move(nodes)), std::move(node_pos),
                        std::move(param_pos)};
  } catch (const GraphError& e) {
    throw ParseError(ParseErrorKind::Syntax, SourcePos{}, e.what());
  }
}

scm::Distribution parse_distribution(std::string_view text) {
  Parser parser(detail::tokenize(text));
  return parser.parse_lone_dist();
}

SpecDocument load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

}  // namespace rclevr::dsl
