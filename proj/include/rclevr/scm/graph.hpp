#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclevr/ops/operator_table.hpp"
#include "rclevr/scm/mechanism.hpp"

namespace rclevr::scm {

enum class RenderFrom { Parent, Clean };

struct Exogenous {
  std::string name;
  Distribution dist;
  bool operator==(const Exogenous&) const = default;
};

struct ParamMechanism {
  std::string name;
  Mechanism mechanism;
  bool operator==(const ParamMechanism&) const = default;
};

struct CorruptionNode {
  std::string name;
  ops::OperatorId op = ops::OperatorId::Clean;
  std::vector<std::string> parents;
  RenderFrom render_from = RenderFrom::Clean;
  std::vector<Exogenous> exogenous;
  std::vector<ParamMechanism> params;

  const ParamMechanism* find_param(std::string_view param) const noexcept;
  bool operator==(const CorruptionNode&) const = default;
};

/// Default render source: the single parent when there is exactly one.
RenderFrom default_render_from(const CorruptionNode& node) noexcept;

/// Parents before children, ties broken by declaration order.
/// Throws UnknownNode for dangling parents and CyclicGraph otherwise.
std::vector<std::string> topological_order(std::span<const CorruptionNode> nodes);

/// Validated DAG of corruption nodes. Immutable once built.
class CausalGraph {
 public:
  /// Throws GraphError (or a subclass) when any invariant fails.
  explicit CausalGraph(std::vector<CorruptionNode> nodes);

  const std::vector<CorruptionNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& order() const noexcept { return order_; }
  std::vector<std::pair<std::string, std::string>> edges() const;

  const CorruptionNode* find(std::string_view name) const noexcept;
  const CorruptionNode& at(std::string_view name) const;

  /// Node-order-insensitive structural equality.
  bool operator==(const CausalGraph& other) const;

 private:
  std::vector<CorruptionNode> nodes_;
  std::vector<std::string> order_;
};

std::vector<std::string> topological_order(const CausalGraph& graph);

/// One realization of every parameter and exogenous term for a scene.
struct SampledTrace {
  std::int64_t scene_id = 0;
  std::uint64_t global_seed = 0;
  std::uint64_t seed = 0;  // per-scene seed derived from (global_seed, scene_id)
  NodeValues values;
  NodeValues exogenous;

  bool operator==(const SampledTrace&) const = default;
};

std::uint64_t scene_seed(std::uint64_t global_seed, std::int64_t scene_id) noexcept;
std::uint64_t node_seed(std::uint64_t scene_seed, std::string_view node) noexcept;

/// Pure function of its arguments; safe to call concurrently.
SampledTrace sample_trace(const CausalGraph& graph, std::int64_t scene_id, std::uint64_t global_seed);

/// Evaluates one node given the values of already-sampled ancestors and
/// fixed exogenous draws. Used by sample_trace and by tests that pin eps.
std::map<std::string, double> evaluate_node(const CorruptionNode& node, const NodeValues& sampled,
                                            const std::map<std::string, double>& eps,
                                            std::uint64_t node_seed);

struct HardIntervention {
  double value;
};

struct SoftIntervention {
  Distribution dist;
};

struct Intervention {
  std::string node;
  std::string param;
  std::variant<HardIntervention, SoftIntervention> kind;
};

/// do(node.param := ...): replaces that parameter's mechanism only.
/// Throws UnknownNode / UnknownParam.
CausalGraph apply_intervention(const CausalGraph& graph, const Intervention& iv);

}  // namespace rclevr::scm
