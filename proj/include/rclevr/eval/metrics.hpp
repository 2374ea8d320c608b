#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclevr/ops/image.hpp"
#include "rclevr/scene/scene.hpp"

namespace rclevr::eval {

/// Minimum-cost assignment of rows to columns (Hungarian method, O(n^3)).
/// Returns, for every row, its column or -1 when there are more rows than
/// columns and the row is left over.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

struct IouTable {
  std::vector<std::int32_t> gt_labels;    // sorted, nonzero
  std::vector<std::int32_t> pred_labels;  // sorted, nonzero
  std::vector<std::vector<double>> iou;   // [gt][pred]
};

/// Pairwise IoU of every non-background object. Throws ShapeMismatch.
IouTable iou_table(const scene::MaskMap& pred, const scene::MaskMap& gt);

struct Match {
  std::int32_t gt;
  std::optional<std::int32_t> pred;  // none when unmatched or zero overlap
  double iou;
};

struct Assignment {
  std::vector<Match> matches;  // one per gt object, ascending gt label
  double total_iou = 0.0;
};

/// One-to-one gt/pred assignment maximizing total IoU; background excluded.
Assignment match_masks(const scene::MaskMap& pred, const scene::MaskMap& gt);

/// Mean over gt objects of matched IoU (unmatched count as 0). nullopt when
/// the ground truth has no objects.
std::optional<double> mean_iou(const scene::MaskMap& pred, const scene::MaskMap& gt);

enum class MseScale { EightBit, Unit };

/// Mean squared error over pixels and channels. EightBit works on byte
/// values (round(255 v)), the precision of every stored image; Unit works on
/// the raw [0, 1] floats. Throws ShapeMismatch.
double mse(const ops::Image& recon, const ops::Image& clean, MseScale scale = MseScale::EightBit);

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
};

/// Percentile bootstrap: half the distance between the 2.5th and 97.5th
/// percentiles of `n_boot` resample means. The returned mean is the plain
/// sample mean. Throws EmptySample.
Estimate bootstrap_ci(std::span<const double> values, int n_boot, std::uint64_t seed,
                      std::vector<std::string>* warnings = nullptr);

struct CurveBin {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  std::optional<double> mean;
  std::size_t count = 0;
};

/// Equal-width bins on [0, 1] over (severity, value) records; severity 1
/// falls in the last bin.
std::vector<CurveBin> severity_curve(std::span<const std::pair<double, double>> records, int n_bins);

}  // namespace rclevr::eval
