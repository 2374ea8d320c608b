#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace rclevr::ops {

enum class OperatorId { Clean, Gamma, Blur, Defocus, Lens, Motion, Noise, Clouds, Glare };

/// Static description of one operator parameter.
struct ParamSpec {
  std::string_view name;
  double min;
  double max;
  double identity;
  // false when larger raw values mean a milder corruption (defocus f_stop).
  bool increases_severity;
  // Upper end of the monotonicity ladder.
  double ladder_end;
};

struct OperatorSpec {
  OperatorId id;
  std::string_view name;
  std::array<ParamSpec, 2> param_storage;
  std::size_t param_count;

  std::span<const ParamSpec> params() const noexcept { return {param_storage.data(), param_count}; }
};

/// All operators, clean first, then the eight corruptions.
std::span<const OperatorSpec> all_operators() noexcept;

/// The eight corruption operators (excludes clean).
std::span<const OperatorSpec> corruption_operators() noexcept;

const OperatorSpec& spec_of(OperatorId id) noexcept;
std::optional<OperatorId> operator_from_name(std::string_view name) noexcept;
std::string_view operator_name(OperatorId id) noexcept;

/// Index of a parameter within its operator, or nullopt.
std::optional<std::size_t> param_index(OperatorId id, std::string_view param) noexcept;

}  // namespace rclevr::ops
