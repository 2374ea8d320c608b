#pragma once

#include "json.hpp"

#include "rclevr/scm/graph.hpp"

namespace rclevr::dataset {

/// {"scene_id", "global_seed", "seed", "nodes": {node: {"params": {...}, "eps": {...}}}}
nlohmann::json trace_to_json(const scm::SampledTrace& trace);

/// Throws SpecError on malformed documents.
scm::SampledTrace trace_from_json(const nlohmann::json& doc);

}  // namespace rclevr::dataset
