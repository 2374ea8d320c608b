#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rclevr/core/random.hpp"

namespace rclevr::scm {

/// Closed real interval; either end may be infinite.
struct Interval {
  double lo;
  double hi;

  bool operator==(const Interval&) const = default;
};

class Distribution;

struct Uniform {
  double lo;
  double hi;
  bool operator==(const Uniform&) const = default;
};

struct HalfNormal {
  double scale;
  bool operator==(const HalfNormal&) const = default;
};

struct Normal {
  double mean;
  double sd;
  bool operator==(const Normal&) const = default;
};

struct DiscreteUniform {
  std::vector<double> values;  // sorted, distinct
  bool operator==(const DiscreteUniform&) const = default;
};

struct PointMass {
  double value;
  bool operator==(const PointMass&) const = default;
};

struct MixtureComponent;

struct Mixture {
  std::vector<MixtureComponent> components;
  bool operator==(const Mixture& other) const;
};

/// Validated, immutable parameter distribution. Construct through the named
/// factories; they throw InvalidDistribution on bad arguments.
class Distribution {
 public:
  using Variant = std::variant<Uniform, HalfNormal, Normal, DiscreteUniform, PointMass, Mixture>;

  static Distribution uniform(double lo, double hi);
  static Distribution half_normal(double scale);
  static Distribution normal(double mean, double sd);
  static Distribution discrete(std::vector<double> values);
  static Distribution point(double value);
  static Distribution mixture(std::vector<MixtureComponent> components);

  double sample(Rng& rng) const;

  /// Smallest interval containing every value the distribution can produce.
  Interval support() const;

  const Variant& variant() const noexcept { return v_; }

  bool operator==(const Distribution&) const = default;

 private:
  explicit Distribution(Variant v) : v_(std::move(v)) {}

  Variant v_;
};

struct MixtureComponent {
  double weight;
  Distribution dist;
  bool operator==(const MixtureComponent&) const = default;
};

inline bool Mixture::operator==(const Mixture& other) const { return components == other.components; }

}  // namespace rclevr::scm
