#include "rclevr/dataset/trace_io.hpp"

#include "rclevr/core/error.hpp"

namespace rclevr::dataset {

nlohmann::json trace_to_json(const scm::SampledTrace& trace) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [name, params] : trace.values) {
    nlohmann::json entry;
    entry["params"] = params;
    const auto eps = trace.exogenous.find(name);
    entry["eps"] = eps == trace.exogenous.end() ? nlohmann::json::object() : nlohmann::json(eps->second);
    nodes[name] = std::move(entry);
  }
  return {{"scene_id", trace.scene_id}, {"global_seed", trace.global_seed}, {"seed", trace.seed}, {"nodes", nodes}};
}

scm::SampledTrace trace_from_json(const nlohmann::json& doc) {
  try {
    scm::SampledTrace t;
    t.scene_id = doc.at("scene_id").get<std::int64_t>();
    t.global_seed = doc.at("global_seed").get<std::uint64_t>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [name, entry] : doc.at("nodes").items()) {
      t.values[name] = entry.at("params").get<std::map<std::string, double>>();
      t.exogenous[name] = entry.at("eps").get<std::map<std::string, double>>();
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed trace document: ") + e.what());
  }
}

}  // namespace rclevr::dataset
