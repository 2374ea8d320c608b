#include <charconv>
#include <cmath>
#include <sstream>

#include "rclevr/dsl/spec.hpp"

namespace rclevr::dsl {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string dist_text(const scm::Distribution& d) {
  return std::visit(
      Overloaded{
          [](const scm::Uniform& u) { return "uniform(" + num(u.lo) + ", " + num(u.hi) + ")"; },
          [](const scm::HalfNormal& h) { return "halfnormal(" + num(h.scale) + ")"; },
          [](const scm::Normal& n) { return "normal(" + num(n.mean) + ", " + num(n.sd) + ")"; },
          [](const scm::PointMass& p) { return "point(" + num(p.value) + ")"; },
          [](const scm::DiscreteUniform& d) {
            const auto& v = d.values;
            bool run = v.size() >= 3;
            for (std::size_t i = 0; run && i < v.size(); ++i) {
              run = v[i] == std::floor(v[i]) && (i == 0 || v[i] == v[i - 1] + 1.0);
            }
            if (run) return "discrete(" + num(v.front()) + ".." + num(v.back()) + ")";
            std::string out = "discrete(";
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
            return out + ")";
          },
          [](const scm::Mixture& m) {
            std::string out = "mixture(";
            for (std::size_t i = 0; i < m.components.size(); ++i) {
              out += (i ? ", " : "") + num(m.components[i].weight) + ": " + dist_text(m.components[i].dist);
            }
            return out + ")";
          },
      },
      d.variant());
}

std::string_view cmp_text(scm::CmpOp op) {
  switch (op) {
    case scm::CmpOp::Less: return "<";
    case scm::CmpOp::LessEqual: return "<=";
    case scm::CmpOp::Greater: return ">";
    case scm::CmpOp::GreaterEqual: return ">=";
    case scm::CmpOp::Equal: return "==";
    case scm::CmpOp::NotEqual: return "!=";
  }
  return "<";
}

std::string cond_text(const scm::Condition& c) {
  return std::visit(Overloaded{
                        [](const scm::Comparison& cmp) {
                          const std::string lhs = std::visit(
                              Overloaded{
                                  [](const scm::ParentRef& r) { return r.node + "." + r.param; },
                                  [](const scm::EpsRef& r) { return "eps(" + r.name + ")"; },
                              },
                              cmp.lhs);
                          return lhs + " " + std::string(cmp_text(cmp.op)) + " " + num(cmp.rhs);
                        },
                        [&](const scm::Junction& j) {
                          std::string out;
                          for (std::size_t i = 0; i < j.terms.size(); ++i) {
                            if (i) out += j.any_of ? " or " : " and ";
                            out += cond_text(j.terms[i]);
                          }
                          // Junctions are always grouped so the tree shape survives a re-parse.
                          return "(" + out + ")";
                        },
                    },
                    c.node);
}

std::string affine_text(const scm::Affine& a) {
  std::string out;
  auto signed_part = [&](double v, const std::string& body) {
    if (out.empty()) {
      out = (std::signbit(v) ? "-" : "") + body;
    } else {
      out += std::signbit(v) ? " - " : " + ";
      out += body;
    }
  };
  for (const auto& t : a.terms) {
    const double mag = std::abs(t.coef);
    signed_part(t.coef, (mag == 1.0 ? "" : num(mag) + "*") + "eps(" + t.eps + ")");
  }
  if (a.terms.empty() || a.offset != 0.0) signed_part(a.offset, num(std::abs(a.offset)));
  return out;
}

std::string expr_text(const scm::Expr& e, bool nested);

std::string branch_text(const scm::Branch& b) {
  std::string out;
  for (std::size_t i = 0; i < b.arms.size(); ++i) {
    out += (i ? " elif " : "if ") + cond_text(b.arms[i].when) + " then " + expr_text(b.arms[i].then, true);
  }
  if (!b.otherwise.empty()) out += " else " + expr_text(b.otherwise.front(), true);
  return out;
}

std::string expr_text(const scm::Expr& e, bool nested) {
  return std::visit(Overloaded{
                        [](const scm::Affine& a) { return affine_text(a); },
                        [](const scm::Draw& d) { return "~ " + dist_text(d.dist); },
                        [&](const scm::Branch& b) {
                          const std::string body = branch_text(b);
                          return nested ? "(" + body + ")" : body;
                        },
                    },
                    e.node);
}

}  // namespace

std::string serialize_spec(const scm::CausalGraph& graph) {
  std::ostringstream os;
  os << "version 1;\n";
  for (const auto& name : graph.order()) {
    const auto& node = graph.at(name);
    os << "\nnode " << node.name;
    if (!node.parents.empty()) {
      os << " after ";
      for (std::size_t i = 0; i < node.parents.size(); ++i) os << (i ? ", " : "") << node.parents[i];
    }
    if (node.render_from != scm::default_render_from(node)) {
      os << " render_from " << (node.render_from == scm::RenderFrom::Parent ? "parent" : "clean");
    }
    os << " {\n  op = " << ops::operator_name(node.op) << ";\n";
    for (const auto& e : node.exogenous) os << "  eps " << e.name << " ~ " << dist_text(e.dist) << ";\n";
    for (const auto& spec : ops::spec_of(node.op).params()) {
      const auto* p = node.find_param(spec.name);
      if (p != nullptr) os << "  " << p->name << " = " << expr_text(p->mechanism.expr, false) << ";\n";
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace rclevr::dsl
