#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rclevr/scm/distribution.hpp"

namespace rclevr::scm {

/// Read of a parent node's already-sampled parameter.
struct ParentRef {
  std::string node;
  std::string param;
  bool operator==(const ParentRef&) const = default;
};

/// Read of one of the node's exogenous draws.
struct EpsRef {
  std::string name;
  bool operator==(const EpsRef&) const = default;
};

using Operand = std::variant<ParentRef, EpsRef>;

enum class CmpOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

struct Comparison {
  Operand lhs;
  CmpOp op;
  double rhs;
  bool operator==(const Comparison&) const = default;
};

struct Condition;

/// Disjunction (`any_of = true`) or conjunction of sub-conditions.
struct Junction {
  bool any_of;
  std::vector<Condition> terms;
  bool operator==(const Junction& other) const;
};

struct Condition {
  std::variant<Comparison, Junction> node;
  bool operator==(const Condition&) const = default;
};

inline bool Junction::operator==(const Junction& other) const {
  return any_of == other.any_of && terms == other.terms;
}

/// offset + sum(coef * eps(name)). A constant has no terms.
struct Affine {
  struct Term {
    double coef;
    std::string eps;
    bool operator==(const Term&) const = default;
  };
  double offset = 0.0;
  std::vector<Term> terms;
  bool operator==(const Affine&) const = default;
};

/// Inline draw from a distribution. `site` numbers draws within one
/// parameter's expression (pre-order) so each draw has its own rng stream.
struct Draw {
  Distribution dist;
  int site = 0;
  bool operator==(const Draw& other) const { return dist == other.dist; }
};

struct Expr;

struct Arm;

/// First arm whose condition holds is evaluated; `otherwise` holds zero or
/// one fallback expression. No match and no fallback is a domain error.
struct Branch {
  std::vector<Arm> arms;
  std::vector<Expr> otherwise;
  bool operator==(const Branch& other) const;
};

struct Expr {
  std::variant<Affine, Draw, Branch> node;
  bool operator==(const Expr&) const = default;
};

struct Arm {
  Condition when;
  Expr then;
  bool operator==(const Arm&) const = default;
};

inline bool Branch::operator==(const Branch& other) const {
  return arms == other.arms && otherwise == other.otherwise;
}

/// Structural equation for one operator parameter.
struct Mechanism {
  Expr expr;
  bool operator==(const Mechanism&) const = default;

  static Mechanism constant(double v) { return {Expr{Affine{v, {}}}}; }
  static Mechanism draw(Distribution d) { return {Expr{Draw{std::move(d), 0}}}; }
};

/// Sampled parameter values keyed by node then parameter.
using NodeValues = std::map<std::string, std::map<std::string, double>>;

/// Renumbers every Draw site in pre-order; returns the number of sites.
int number_draw_sites(Expr& expr);

/// Evaluates a mechanism. `parents` holds values of already-sampled nodes,
/// `eps` the node's exogenous draws, and `param_seed` seeds the draw sites.
double evaluate(const Expr& expr, const NodeValues& parents, const std::map<std::string, double>& eps,
                std::uint64_t param_seed);

bool holds(const Condition& cond, const NodeValues& parents, const std::map<std::string, double>& eps);

/// Interval containing every value the expression can take, given intervals
/// for the exogenous terms. Parent-dependent conditions are treated as
/// undecided, so all arms contribute.
Interval support(const Expr& expr, const std::map<std::string, Interval>& eps);

/// Calls `fn` on every ParentRef reachable from the expression.
void for_each_parent_ref(const Expr& expr, const std::function<void(const ParentRef&)>& fn);
void for_each_eps_ref(const Expr& expr, const std::function<void(const EpsRef&)>& fn);

}  // namespace rclevr::scm
