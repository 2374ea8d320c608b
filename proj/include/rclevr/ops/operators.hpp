#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rclevr/ops/image.hpp"
#include "rclevr/ops/operator_table.hpp"

namespace rclevr::ops {

/// Parameter values of one operator, stored in operator-table order.
struct OperatorParams {
  OperatorId op = OperatorId::Clean;
  std::array<double, 2> values{};

  double get(std::string_view param) const;
  bool operator==(const OperatorParams&) const = default;

  static OperatorParams identity(OperatorId op) noexcept;
};

/// Emitted when a raw value is pulled back into the operator domain.
struct ClampNote {
  std::string param;
  double raw;
  double clamped;
};

/// Builds params from a name -> value map, clamping into the operator domain.
/// Throws DomainError for missing, unknown, or non-finite values.
OperatorParams make_params(OperatorId op, const std::map<std::string, double>& values,
                           std::vector<ClampNote>* notes = nullptr);

/// Throws DomainError unless every value lies inside the operator domain.
void check_domain(const OperatorParams& params);

/// True when the params leave every image unchanged.
bool is_identity(const OperatorParams& params);

/// Applies one corruption. Pure and deterministic in all arguments; identity
/// params return the input unchanged. Output values are clamped to [0, 1].
Image apply(OperatorId op, const Image& image, const OperatorParams& params, std::uint64_t noise_seed);

/// Separable Gaussian blur, radius ceil(3 sigma), reflect-101 padding.
Image gaussian_blur(const Image& image, double sigma);

/// Fractal value noise in [0, 1], one value per pixel, row-major.
std::vector<float> cloud_field(int width, int height, std::uint64_t seed);

/// Disc-kernel radius used by defocus, in pixels.
double defocus_radius(double z, double f_stop) noexcept;

}  // namespace rclevr::ops
