#include <cmath>
#include <sstream>

#include "rclevr/dsl/spec.hpp"

namespace rclevr::dsl {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<Diagnostic> validate_spec(const SpecDocument& doc) {
  std::vector<Diagnostic> out;
  for (const auto& name : doc.graph.order()) {
    const auto& node = doc.graph.at(name);
    std::map<std::string, scm::Interval> eps;
    for (const auto& e : node.exogenous) eps[e.name] = e.dist.support();
    for (const auto& spec : ops::spec_of(node.op).params()) {
      const auto* p = node.find_param(spec.name);
      if (p == nullptr) continue;
      const scm::Interval s = scm::support(p->mechanism.expr, eps);
      const auto pos_it = doc.param_pos.find({node.name, p->name});
      const SourcePos pos = pos_it == doc.param_pos.end() ? SourcePos{} : pos_it->second;
      const std::string param(spec.name);
      const std::string range = "[" + fmt(s.lo) + ", " + fmt(s.hi) + "]";
      if (s.lo < spec.min) {
        if (std::isfinite(s.lo)) {
          out.push_back({DiagnosticLevel::Error, pos, node.name, param,
                         "support " + range + " below domain minimum " + fmt(spec.min)});
        } else {
          out.push_back({DiagnosticLevel::Warning, pos, node.name, param,
                         "unbounded below; values clamped to " + param + "_min = " + fmt(spec.min)});
        }
      }
      if (s.hi > spec.max) {
        if (std::isfinite(s.hi)) {
          out.push_back({DiagnosticLevel::Error, pos, node.name, param,
                         "support " + range + " above domain maximum " + fmt(spec.max)});
        } else {
          out.push_back({DiagnosticLevel::Warning, pos, node.name, param,
                         "unbounded above; values clamped to " + param + "_max = " + fmt(spec.max)});
        }
      }
    }
  }
  return out;
}

std::string format_diagnostic(const Diagnostic& d) {
  std::ostringstream os;
  os << d.pos.line << ':' << d.pos.column << ": " << (d.level == DiagnosticLevel::Error ? "error" : "warning")
     << ": " << d.node << '.' << d.param << ": " << d.message;
  return os.str();
}

}  // namespace rclevr::dsl
