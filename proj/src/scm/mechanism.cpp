#include "rclevr/scm/mechanism.hpp"

#include <algorithm>
#include <limits>

#include "rclevr/core/error.hpp"

namespace rclevr::scm {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

void number_sites(Expr& expr, int& next) {
  std::visit(Overloaded{
                 [](Affine&) {},
                 [&](Draw& d) { d.site = next++; },
                 [&](Branch& b) {
                   for (auto& arm : b.arms) number_sites(arm.then, next);
                   for (auto& e : b.otherwise) number_sites(e, next);
                 },
             },
             expr.node);
}

double read_operand(const Operand& operand, const NodeValues& parents,
                    const std::map<std::string, double>& eps) {
  return std::visit(Overloaded{
                        [&](const ParentRef& ref) {
                          const auto node = parents.find(ref.node);
                          if (node == parents.end()) {
                            throw UnknownNode("mechanism reads unsampled node '" + ref.node + "'");
                          }
                          const auto value = node->second.find(ref.param);
                          if (value == node->second.end()) {
                            throw UnknownParam("mechanism reads unknown parameter '" + ref.node + "." +
                                               ref.param + "'");
                          }
                          return value->second;
                        },
                        [&](const EpsRef& ref) {
                          const auto it = eps.find(ref.name);
                          if (it == eps.end()) throw UnknownParam("undeclared exogenous term '" + ref.name + "'");
                          return it->second;
                        },
                    },
                    operand);
}

bool compare(double lhs, CmpOp op, double rhs) {
  switch (op) {
    case CmpOp::Less: return lhs < rhs;
    case CmpOp::LessEqual: return lhs <= rhs;
    case CmpOp::Greater: return lhs > rhs;
    case CmpOp::GreaterEqual: return lhs >= rhs;
    case CmpOp::Equal: return lhs == rhs;
    case CmpOp::NotEqual: return lhs != rhs;
  }
  return false;
}

void visit_condition_operands(const Condition& cond, const std::function<void(const Operand&)>& fn) {
  std::visit(Overloaded{
                 [&](const Comparison& c) { fn(c.lhs); },
                 [&](const Junction& j) {
                   for (const auto& t : j.terms) visit_condition_operands(t, fn);
                 },
             },
             cond.node);
}

void visit_expr(const Expr& expr, const std::function<void(const Operand&)>& on_operand,
                const std::function<void(const std::string&)>& on_affine_eps) {
  std::visit(Overloaded{
                 [&](const Affine& a) {
                   for (const auto& t : a.terms) on_affine_eps(t.eps);
                 },
                 [](const Draw&) {},
                 [&](const Branch& b) {
                   for (const auto& arm : b.arms) {
                     visit_condition_operands(arm.when, on_operand);
                     visit_expr(arm.then, on_operand, on_affine_eps);
                   }
                   for (const auto& e : b.otherwise) visit_expr(e, on_operand, on_affine_eps);
                 },
             },
             expr.node);
}

}  // namespace

int number_draw_sites(Expr& expr) {
  int next = 0;
  number_sites(expr, next);
  return next;
}

bool holds(const Condition& cond, const NodeValues& parents, const std::map<std::string, double>& eps) {
  return std::visit(Overloaded{
                        [&](const Comparison& c) { return compare(read_operand(c.lhs, parents, eps), c.op, c.rhs); },
                        [&](const Junction& j) {
                          if (j.any_of) {
                            return std::any_of(j.terms.begin(), j.terms.end(),
                                               [&](const Condition& t) { return holds(t, parents, eps); });
                          }
                          return std::all_of(j.terms.begin(), j.terms.end(),
                                             [&](const Condition& t) { return holds(t, parents, eps); });
                        },
                    },
                    cond.node);
}

double evaluate(const Expr& expr, const NodeValues& parents, const std::map<std::string, double>& eps,
                std::uint64_t param_seed) {
  return std::visit(Overloaded{
                        [&](const Affine& a) {
                          double v = a.offset;
                          for (const auto& t : a.terms) v += t.coef * read_operand(EpsRef{t.eps}, parents, eps);
                          return v;
                        },
                        [&](const Draw& d) {
                          Rng rng(derive_seed({param_seed, static_cast<std::uint64_t>(d.site)}));
                          return d.dist.sample(rng);
                        },
                        [&](const Branch& b) {
                          for (const auto& arm : b.arms) {
                            if (holds(arm.when, parents, eps)) return evaluate(arm.then, parents, eps, param_seed);
                          }
                          if (b.otherwise.empty()) {
                            throw MechanismDomainError("no branch of the mechanism covers the parent values");
                          }
                          return evaluate(b.otherwise.front(), parents, eps, param_seed);
                        },
                    },
                    expr.node);
}

Interval support(const Expr& expr, const std::map<std::string, Interval>& eps) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  return std::visit(Overloaded{
                        [&](const Affine& a) {
                          Interval out{a.offset, a.offset};
                          for (const auto& t : a.terms) {
                            if (t.coef == 0) continue;
                            const auto it = eps.find(t.eps);
                            const Interval e = it == eps.end() ? Interval{-kInf, kInf} : it->second;
                            const double x = t.coef * e.lo;
                            const double y = t.coef * e.hi;
                            out.lo += std::min(x, y);
                            out.hi += std::max(x, y);
                          }
                          return out;
                        },
                        [](const Draw& d) { return d.dist.support(); },
                        [&](const Branch& b) {
                          Interval hull{kInf, -kInf};
                          auto widen = [&](const Expr& e) {
                            const Interval s = support(e, eps);
                            hull.lo = std::min(hull.lo, s.lo);
                            hull.hi = std::max(hull.hi, s.hi);
                          };
                          for (const auto& arm : b.arms) widen(arm.then);
                          for (const auto& e : b.otherwise) widen(e);
                          return hull;
                        },
                    },
                    expr.node);
}

void for_each_parent_ref(const Expr& expr, const std::function<void(const ParentRef&)>& fn) {
  visit_expr(
      expr,
      [&](const Operand& op) {
        if (const auto* ref = std::get_if<ParentRef>(&op)) fn(*ref);
      },
      [](const std::string&) {});
}

void for_each_eps_ref(const Expr& expr, const std::function<void(const EpsRef&)>& fn) {
  visit_expr(
      expr,
      [&](const Operand& op) {
        if (const auto* ref = std::get_if<EpsRef>(&op)) fn(*ref);
      },
      [&](const std::string& name) { fn(EpsRef{name}); });
}

}  // namespace rclevr::scm
