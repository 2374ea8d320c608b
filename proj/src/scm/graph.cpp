#include "rclevr/scm/graph.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "rclevr/core/error.hpp"

namespace rclevr::scm {

const ParamMechanism* CorruptionNode::find_param(std::string_view param) const noexcept {
  for (const auto& p : params) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

RenderFrom default_render_from(const CorruptionNode& node) noexcept {
  return node.parents.size() == 1 ? RenderFrom::Parent : RenderFrom::Clean;
}

std::vector<std::string> topological_order(std::span<const CorruptionNode> nodes) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i].name, i);

  std::vector<std::size_t> pending(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> children(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& parent : nodes[i].parents) {
      const auto it = index.find(parent);
      if (it == index.end()) {
        throw UnknownNode("edge " + parent + " -> " + nodes[i].name + " names unknown node '" + parent + "'");
      }
      children[it->second].push_back(i);
      ++pending[i];
    }
  }

  // Kahn's algorithm; the ready set is ordered by declaration index.
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (pending[i] == 0) ready.insert(i);
  }
  std::vector<std::string> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(nodes[i].name);
    for (std::size_t c : children[i]) {
      if (--pending[c] == 0) ready.insert(c);
    }
  }
  if (order.size() == nodes.size()) return order;

  // Walk parent links among the stuck nodes until one repeats.
  std::size_t cur = 0;
  while (pending[cur] == 0) ++cur;
  std::vector<std::size_t> path;
  std::vector<int> seen(nodes.size(), -1);
  while (seen[cur] < 0) {
    seen[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    for (const auto& parent : nodes[cur].parents) {
      const std::size_t p = index.find(parent)->second;
      if (pending[p] != 0) {
        cur = p;
        break;
      }
    }
  }
  std::vector<std::string> cycle;
  for (auto i = static_cast<std::size_t>(seen[cur]); i < path.size(); ++i) cycle.push_back(nodes[path[i]].name);
  std::reverse(cycle.begin(), cycle.end());
  cycle.push_back(cycle.front());
  std::string text;
  for (const auto& n : cycle) text += (text.empty() ? "" : " -> ") + n;
  throw CyclicGraph(cycle, "graph contains a cycle: " + text);
}

namespace {

void validate_node(const CorruptionNode& node, const std::map<std::string, const CorruptionNode*, std::less<>>& by_name) {
  const auto& spec = ops::spec_of(node.op);
  for (const auto& required : spec.params()) {
    if (node.find_param(required.name) == nullptr) {
      throw GraphError("node '" + node.name + "' (" + std::string(spec.name) + ") is missing parameter '" +
                       std::string(required.name) + "'");
    }
  }
  std::set<std::string> seen_params;
  for (const auto& p : node.params) {
    if (!ops::param_index(node.op, p.name)) {
      throw GraphError("node '" + node.name + "': operator " + std::string(spec.name) +
                       " has no parameter '" + p.name + "'");
    }
    if (!seen_params.insert(p.name).second) {
      throw GraphError("node '" + node.name + "' defines parameter '" + p.name + "' twice");
    }
  }
  if (node.render_from == RenderFrom::Parent && node.parents.size() != 1) {
    throw GraphError("node '" + node.name + "' renders from its parent but has " +
                     std::to_string(node.parents.size()) + " parents");
  }
  std::set<std::string> parents(node.parents.begin(), node.parents.end());
  if (parents.size() != node.parents.size()) {
    throw GraphError("node '" + node.name + "' lists a parent twice");
  }
  std::set<std::string> eps_names;
  for (const auto& e : node.exogenous) {
    if (!eps_names.insert(e.name).second) {
      throw GraphError("node '" + node.name + "' declares exogenous term '" + e.name + "' twice");
    }
  }
  for (const auto& p : node.params) {
    for_each_parent_ref(p.mechanism.expr, [&](const ParentRef& ref) {
      if (!parents.contains(ref.node)) {
        throw UnknownNode("node '" + node.name + "' reads '" + ref.node + "', which is not a parent");
      }
      const auto it = by_name.find(ref.node);
      if (it == by_name.end()) throw UnknownNode("unknown node '" + ref.node + "'");
      if (!ops::param_index(it->second->op, ref.param)) {
        throw UnknownParam("node '" + node.name + "' reads unknown parameter '" + ref.node + "." + ref.param + "'");
      }
    });
    for_each_eps_ref(p.mechanism.expr, [&](const EpsRef& ref) {
      if (!eps_names.contains(ref.name)) {
        throw UnknownParam("node '" + node.name + "' reads undeclared exogenous term '" + ref.name + "'");
      }
    });
  }
}

}  // namespace

CausalGraph::CausalGraph(std::vector<CorruptionNode> nodes) : nodes_(std::move(nodes)) {
  std::map<std::string, const CorruptionNode*, std::less<>> by_name;
  for (const auto& n : nodes_) {
    if (n.name.empty()) throw GraphError("node names must be non-empty");
    if (!by_name.emplace(n.name, &n).second) throw GraphError("duplicate node '" + n.name + "'");
  }
  order_ = topological_order(std::span<const CorruptionNode>(nodes_));
  for (auto& n : nodes_) {
    for (auto& p : n.params) number_draw_sites(p.mechanism.expr);
  }
  for (const auto& n : nodes_) validate_node(n, by_name);
  // Parameters are kept in operator order so equality ignores declaration order.
  for (auto& n : nodes_) {
    std::stable_sort(n.params.begin(), n.params.end(), [&](const ParamMechanism& a, const ParamMechanism& b) {
      return *ops::param_index(n.op, a.name) < *ops::param_index(n.op, b.name);
    });
  }
}

std::vector<std::pair<std::string, std::string>> CausalGraph::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& n : nodes_) {
    for (const auto& p : n.parents) out.emplace_back(p, n.name);
  }
  return out;
}

const CorruptionNode* CausalGraph::find(std::string_view name) const noexcept {
  for (const auto& n : nodes_) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

const CorruptionNode& CausalGraph::at(std::string_view name) const {
  const auto* n = find(name);
  if (n == nullptr) throw UnknownNode("unknown node '" + std::string(name) + "'");
  return *n;
}

bool CausalGraph::operator==(const CausalGraph& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (const auto& n : nodes_) {
    const auto* m = other.find(n.name);
    if (m == nullptr || !(*m == n)) return false;
  }
  return true;
}

std::vector<std::string> topological_order(const CausalGraph& graph) { return graph.order(); }

std::uint64_t scene_seed(std::uint64_t global_seed, std::int64_t scene_id) noexcept {
  return derive_seed({global_seed, static_cast<std::uint64_t>(scene_id)});
}

std::uint64_t node_seed(std::uint64_t scene_seed, std::string_view node) noexcept {
  return derive_seed({scene_seed, hash_name(node)});
}

std::map<std::string, double> evaluate_node(const CorruptionNode& node, const NodeValues& sampled,
                                            const std::map<std::string, double>& eps,
                                            std::uint64_t seed) {
  std::map<std::string, double> out;
  for (const auto& p : node.params) {
    const std::uint64_t param_seed = derive_seed({seed, hash_name("param:" + p.name)});
    out[p.name] = evaluate(p.mechanism.expr, sampled, eps, param_seed);
  }
  return out;
}

SampledTrace sample_trace(const CausalGraph& graph, std::int64_t scene_id, std::uint64_t global_seed) {
  SampledTrace trace;
  trace.scene_id = scene_id;
  trace.global_seed = global_seed;
  trace.seed = scene_seed(global_seed, scene_id);
  for (const auto& name : graph.order()) {
    const auto& node = graph.at(name);
    const std::uint64_t seed = node_seed(trace.seed, name);
    std::map<std::string, double> eps;
    for (const auto& e : node.exogenous) {
      Rng rng(derive_seed({seed, hash_name("eps:" + e.name)}));
      eps[e.name] = e.dist.sample(rng);
    }
    trace.values[name] = evaluate_node(node, trace.values, eps, seed);
    trace.exogenous[name] = std::move(eps);
  }
  return trace;
}

CausalGraph apply_intervention(const CausalGraph& graph, const Intervention& iv) {
  std::vector<CorruptionNode> nodes = graph.nodes();
  auto node = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.name == iv.node; });
  if (node == nodes.end()) throw UnknownNode("intervention targets unknown node '" + iv.node + "'");
  auto param = std::find_if(node->params.begin(), node->params.end(),
                            [&](const auto& p) { return p.name == iv.param; });
  if (param == node->params.end()) {
    throw UnknownParam("intervention targets unknown parameter '" + iv.node + "." + iv.param + "'");
  }
  param->mechanism = std::visit(
      [](const auto& kind) {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, HardIntervention>) {
          return Mechanism::draw(Distribution::point(kind.value));
        } else {
          return Mechanism::draw(kind.dist);
        }
      },
      iv.kind);
  return CausalGraph(std::move(nodes));
}

}  // namespace rclevr::scm
