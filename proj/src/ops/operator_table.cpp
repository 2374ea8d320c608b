#include "rclevr/ops/operator_table.hpp"


namespace rclevr::ops {
namespace {

constexpr ParamSpec kNone{};

constexpr std::array<OperatorSpec, 9> kOperators{{
    {OperatorId::Clean, "clean", {kNone, kNone}, 0},
    {OperatorId::Gamma, "gamma", {ParamSpec{"gamma", 1.0, 5.0, 1.0, true, 3.0}, kNone}, 1},
    {OperatorId::Blur, "blur", {ParamSpec{"sigma", 0.0, 25.0, 1.0, true, 11.0}, kNone}, 1},
    {OperatorId::Defocus,
     "defocus",
     {ParamSpec{"z", 1.0, 10.0, 1.0, true, 10.0}, ParamSpec{"f_stop", 64.0, 128.0, 128.0, false, 128.0}},
     2},
    {OperatorId::Lens,
     "lens",
     {ParamSpec{"distort", 0.0, 1.0, 0.0, true, 0.3}, ParamSpec{"disperse", 0.0, 2.0, 0.0, true, 0.5}},
     2},
    {OperatorId::Motion,
     "motion",
     {ParamSpec{"distance", 0.0, 1.0, 0.0, true, 0.1}, ParamSpec{"zoom", 0.0, 1.0, 0.0, true, 0.1}},
     2},
    {OperatorId::Noise, "noise", {ParamSpec{"scale", 0.0, 1.0, 0.0, true, 0.25}, kNone}, 1},
    {OperatorId::Clouds, "clouds", {ParamSpec{"factor", 0.0, 1.0, 0.0, true, 1.0}, kNone}, 1},
    {OperatorId::Glare, "glare", {ParamSpec{"mix", -0.5, 0.5, -0.5, true, 0.5}, kNone}, 1},
}};

}  // namespace

std::span<const OperatorSpec> all_operators() noexcept { return kOperators; }

std::span<const OperatorSpec> corruption_operators() noexcept {
  return std::span<const OperatorSpec>(kOperators).subspan(1);
}

const OperatorSpec& spec_of(OperatorId id) noexcept { return kOperators[static_cast<std::size_t>(id)]; }

std::optional<OperatorId> operator_from_name(std::string_view name) noexcept {
  for (const auto& op : kOperators) {
    if (op.name == name) return op.id;
  }
  return std::nullopt;
}

std::string_view operator_name(OperatorId id) noexcept { return spec_of(id).name; }

std::optional<std::size_t> param_index(OperatorId id, std::string_view param) noexcept {
  const auto params = spec_of(id).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == param) return i;
  }
  return std::nullopt;
}

}  // namespace rclevr::ops
