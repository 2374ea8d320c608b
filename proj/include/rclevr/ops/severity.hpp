#pragma once

#include <span>
#include <vector>

#include "rclevr/ops/operators.hpp"

namespace rclevr::ops {

struct Severity {
  double raw = 0.0;         // primary (first) parameter value
  double normalized = 0.0;  // in [0, 1]
};

struct ParamRange {
  double min;
  double max;
};

/// Min-max normalization of each parameter over an observed sample set,
/// oriented so that 1 is the most severe end, then averaged over the
/// parameters whose observed range is nondegenerate. `observed` is indexed
/// in operator-table order.
Severity severity_normalize(OperatorId op, const OperatorParams& params, std::span<const ParamRange> observed);

/// Observed per-parameter ranges of a sample set (operator-table order).
std::vector<ParamRange> observed_ranges(OperatorId op, std::span<const OperatorParams> samples);

/// `steps` parameter settings moving every parameter from its identity value
/// toward its ladder end; the first entry is the identity.
std::vector<OperatorParams> severity_ladder(OperatorId op, int steps = 10);

}  // namespace rclevr::ops
