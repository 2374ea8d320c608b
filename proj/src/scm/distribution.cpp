#include "rclevr/scm/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rclevr/core/error.hpp"

namespace rclevr::scm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWeightTolerance = 1e-9;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidDistribution(std::string(what) + " must be finite");
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

}  // namespace

Distribution Distribution::uniform(double lo, double hi) {
  require_finite(lo, "uniform lower bound");
  require_finite(hi, "uniform upper bound");
  if (lo > hi) throw InvalidDistribution("uniform requires lo <= hi");
  return Distribution(Uniform{lo, hi});
}

Distribution Distribution::half_normal(double scale) {
  require_finite(scale, "half-normal scale");
  if (scale < 0) throw InvalidDistribution("half-normal scale must be >= 0");
  return Distribution(HalfNormal{scale});
}

Distribution Distribution::normal(double mean, double sd) {
  require_finite(mean, "normal mean");
  require_finite(sd, "normal sd");
  if (sd < 0) throw InvalidDistribution("normal sd must be >= 0");
  return Distribution(Normal{mean, sd});
}

Distribution Distribution::discrete(std::vector<double> values) {
  if (values.empty()) throw InvalidDistribution("discrete set must be non-empty");
  for (double v : values) require_finite(v, "discrete value");
  std::sort(values.begin(), values.end());
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
    throw InvalidDistribution("discrete set values must be distinct");
  }
  return Distribution(DiscreteUniform{std::move(values)});
}

Distribution Distribution::point(double value) {
  require_finite(value, "point mass value");
  return Distribution(PointMass{value});
}

Distribution Distribution::mixture(std::vector<MixtureComponent> components) {
  if (components.empty()) throw InvalidDistribution("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    require_finite(c.weight, "mixture weight");
    if (c.weight < 0) throw InvalidDistribution("mixture weights must be nonnegative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) throw InvalidDistribution("mixture weights must sum to 1");
  return Distribution(Mixture{std::move(components)});
}

double Distribution::sample(Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const Uniform& u) { return u.lo + (u.hi - u.lo) * rng.uniform01(); },
          [&](const HalfNormal& h) { return std::abs(h.scale * rng.normal()); },
          [&](const Normal& n) { return n.mean + n.sd * rng.normal(); },
          [&](const DiscreteUniform& d) { return d.values[rng.below(d.values.size())]; },
          [&](const PointMass& p) { return p.value; },
          [&](const Mixture& m) {
            const double u = rng.uniform01();
            double acc = 0.0;
            for (const auto& c : m.components) {
              acc += c.weight;
              if (u < acc) return c.dist.sample(rng);
            }
            // Rounding left u above the running sum; take the last weighted component.
            for (auto it = m.components.rbegin(); it != m.components.rend(); ++it) {
              if (it->weight > 0) return it->dist.sample(rng);
            }
            return m.components.back().dist.sample(rng);
          },
      },
      v_);
}

Interval Distribution::support() const {
  return std::visit(
      Overloaded{
          [](const Uniform& u) { return Interval{u.lo, u.hi}; },
          [](const HalfNormal& h) { return Interval{0.0, h.scale > 0 ? kInf : 0.0}; },
          [](const Normal& n) { return n.sd > 0 ? Interval{-kInf, kInf} : Interval{n.mean, n.mean}; },
          [](const DiscreteUniform& d) { return Interval{d.values.front(), d.values.back()}; },
          [](const PointMass& p) { return Interval{p.value, p.value}; },
          [](const Mixture& m) {
            Interval hull{kInf, -kInf};
            for (const auto& c : m.components) {
              if (c.weight <= 0) continue;
              const Interval s = c.dist.support();
              hull.lo = std::min(hull.lo, s.lo);
              hull.hi = std::max(hull.hi, s.hi);
            }
            return hull;
          },
      },
      v_);
}

}  // namespace rclevr::scm
