#include "rclevr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rclevr/core/error.hpp"
#include "rclevr/core/random.hpp"

namespace rclevr::eval {

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows == 0 ? 0 : cost.front().size();
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};
  auto at = [&](std::size_t r, std::size_t c) { return r < rows && c < cols ? cost[r][c] : 0.0; };

  // Potentials formulation on the square padding; arrays are 1-based.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = owner[j] - 1;
    if (r < rows && j - 1 < cols) result[r] = static_cast<int>(j - 1);
  }
  return result;
}

IouTable iou_table(const scene::MaskMap& pred, const scene::MaskMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeMismatch("prediction mask is " + std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                        ", ground truth is " + std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  std::map<std::int32_t, std::size_t> gt_area, pred_area;
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> inter;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const auto g = gt.labels[i];
    const auto p = pred.labels[i];
    if (g != 0) ++gt_area[g];
    if (p != 0) ++pred_area[p];
    if (g != 0 && p != 0) ++inter[{g, p}];
  }
  IouTable t;
  for (const auto& [l, _] : gt_area) t.gt_labels.push_back(l);
  for (const auto& [l, _] : pred_area) t.pred_labels.push_back(l);
  t.iou.assign(t.gt_labels.size(), std::vector<double>(t.pred_labels.size(), 0.0));
  for (std::size_t gi = 0; gi < t.gt_labels.size(); ++gi) {
    for (std::size_t pi = 0; pi < t.pred_labels.size(); ++pi) {
      const auto it = inter.find({t.gt_labels[gi], t.pred_labels[pi]});
      if (it == inter.end()) continue;
      const double i = static_cast<double>(it->second);
      const double u = static_cast<double>(gt_area[t.gt_labels[gi]] + pred_area[t.pred_labels[pi]]) - i;
      t.iou[gi][pi] = i / u;
    }
  }
  return t;
}

Assignment match_masks(const scene::MaskMap& pred, const scene::MaskMap& gt) {
  const IouTable t = iou_table(pred, gt);
  std::vector<std::vector<double>> cost(t.gt_labels.size(), std::vector<double>(t.pred_labels.size()));
  for (std::size_t g = 0; g < cost.size(); ++g) {
    for (std::size_t p = 0; p < t.pred_labels.size(); ++p) cost[g][p] = -t.iou[g][p];
  }
  const auto cols = solve_assignment(cost);
  Assignment a;
  for (std::size_t g = 0; g < t.gt_labels.size(); ++g) {
    Match m{t.gt_labels[g], std::nullopt, 0.0};
    if (cols[g] >= 0 && t.iou[g][static_cast<std::size_t>(cols[g])] > 0.0) {
      m.pred = t.pred_labels[static_cast<std::size_t>(cols[g])];
      m.iou = t.iou[g][static_cast<std::size_t>(cols[g])];
    }
    a.total_iou += m.iou;
    a.matches.push_back(m);
  }
  return a;
}

std::optional<double> mean_iou(const scene::MaskMap& pred, const scene::MaskMap& gt) {
  const Assignment a = match_masks(pred, gt);
  if (a.matches.empty()) return std::nullopt;
  return a.total_iou / static_cast<double>(a.matches.size());
}

double mse(const ops::Image& recon, const ops::Image& clean, MseScale scale) {
  const double unit = ops::mse_unit(recon, clean);  // also checks shapes
  if (scale == MseScale::Unit || recon.empty()) return unit;
  // Integer byte differences, so 8-bit data gives exact results.
  std::uint64_t acc = 0;
  const auto a = recon.data();
  const auto b = clean.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = std::lround(a[i] * 255.0f) - std::lround(b[i] * 255.0f);
    acc += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(acc) / static_cast<double>(a.size());
}

namespace {

/// Linear-interpolated percentile of sorted data (q in [0, 1]).
double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

Estimate bootstrap_ci(std::span<const double> values, int n_boot, std::uint64_t seed, std::vector<std::string>* warnings) {
  if (values.empty()) throw EmptySample("bootstrap needs at least one sample");
  Estimate e;
  e.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) {
    if (warnings != nullptr) warnings->push_back("bootstrap over a single sample; half-width set to 0");
    return e;
  }
  if (n_boot < 2) return e;
  Rng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(n_boot));
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) acc += values[rng.below(values.size())];
    m = acc / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  e.half_width = std::max(0.0, (percentile(means, 0.975) - percentile(means, 0.025)) / 2.0);
  return e;
}

std::vector<CurveBin> severity_curve(std::span<const std::pair<double, double>> records, int n_bins) {
  if (n_bins < 1) n_bins = 1;
  std::vector<CurveBin> bins(static_cast<std::size_t>(n_bins));
  std::vector<double> sums(bins.size(), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = bins[static_cast<std::size_t>(b)];
    bin.lo = static_cast<double>(b) / n_bins;
    bin.hi = static_cast<double>(b + 1) / n_bins;
    bin.center = (bin.lo + bin.hi) / 2.0;
  }
  for (const auto& [severity, value] : records) {
    const double s = std::clamp(severity, 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(s * n_bins), bins.size() - 1);
    sums[b] += value;
    ++bins[b].count;
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count > 0) bins[b].mean = sums[b] / static_cast<double>(bins[b].count);
  }
  return bins;
}

}  // namespace rclevr::eval
