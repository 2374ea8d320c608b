#include "rclevr/ops/severity.hpp"

#include <algorithm>
#include <limits>

namespace rclevr::ops {

Severity severity_normalize(OperatorId op, const OperatorParams& params, std::span<const ParamRange> observed) {
  const auto specs = spec_of(op).params();
  Severity out;
  if (!specs.empty()) out.raw = params.values[0];
  double total = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < specs.size() && i < observed.size(); ++i) {
    const ParamRange r = observed[i];
    if (!(r.max > r.min)) continue;
    double t = (params.values[i] - r.min) / (r.max - r.min);
    if (!specs[i].increases_severity) t = 1.0 - t;
    total += std::clamp(t, 0.0, 1.0);
    ++used;
  }
  out.normalized = used > 0 ? total / used : 0.0;
  return out;
}

std::vector<ParamRange> observed_ranges(OperatorId op, std::span<const OperatorParams> samples) {
  const auto specs = spec_of(op).params();
  std::vector<ParamRange> out(specs.size(), ParamRange{std::numeric_limits<double>::infinity(),
                                                       -std::numeric_limits<double>::infinity()});
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      out[i].min = std::min(out[i].min, s.values[i]);
      out[i].max = std::max(out[i].max, s.values[i]);
    }
  }
  return out;
}

std::vector<OperatorParams> severity_ladder(OperatorId op, int steps) {
  const auto specs = spec_of(op).params();
  std::vector<OperatorParams> out;
  for (int s = 0; s < steps; ++s) {
    const double t = steps > 1 ? static_cast<double>(s) / (steps - 1) : 0.0;
    OperatorParams p = OperatorParams::identity(op);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      p.values[i] = specs[i].identity + t * (specs[i].ladder_end - specs[i].identity);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace rclevr::ops
