#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rclevr/eval/metrics.hpp"

namespace rclevr::eval {

namespace fs = std::filesystem;

struct EvalOptions {
  std::uint64_t seed = 0;
  int n_boot = 1000;
  int n_bins = 10;
  MseScale mse_scale = MseScale::EightBit;
  int workers = 1;  // not part of the report; results do not depend on it
};

/// One scored (scene, variant) pair; variant is "clean" or a node name.
struct ScoreRecord {
  std::int64_t scene_id = 0;
  std::string variant;
  double severity = 0.0;  // normalized per node; 0 for clean
  std::optional<double> miou;
  std::optional<double> mse;
};

struct VariantSummary {
  std::string variant;
  std::string op;  // "clean" for the clean variant
  std::optional<Estimate> miou;
  std::optional<Estimate> mse;
  std::vector<CurveBin> miou_curve;  // corruptions only
  std::vector<CurveBin> mse_curve;
};

struct PredictionSetSummary {
  std::string label;  // directory name of the prediction set
  std::optional<double> clean_miou;
  std::size_t records = 0;
};

struct EvalReport {
  std::string spec_fingerprint;
  std::int64_t scene_count = 0;
  std::vector<std::string> node_order;
  std::uint64_t seed = 0;
  int n_boot = 1000;
  int n_bins = 10;
  MseScale mse_scale = MseScale::EightBit;
  std::vector<PredictionSetSummary> prediction_sets;
  std::size_t selected = 0;  // highest clean mIoU, first on ties
  std::vector<VariantSummary> variants;  // clean first, then node order
  std::vector<ScoreRecord> records;      // selected set, scene then variant order
  std::vector<std::string> diagnostics;
};

inline constexpr std::string_view kReportFormat = "rclevr-report/1";

/// Scores every prediction set against the dataset and reports the one with
/// the highest clean mIoU. Predictions live at
/// `<pred>/scenes/<id>/<variant>/{pred_masks.png,recon.png}`.
EvalReport evaluate(const fs::path& dataset_dir, std::span<const fs::path> prediction_dirs,
                    const EvalOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);  // throws SpecError
EvalReport load_report(const fs::path& path);

/// Per-scene rows of the selected prediction set.
std::string records_csv(const EvalReport& report);

/// Re-bins the per-scene records of every corruption into `n_bins` bins.
std::vector<VariantSummary> rebin(const EvalReport& report, int n_bins);

/// Exactly `n_bins` rows per corruption.
std::string curves_csv(const EvalReport& report, int n_bins);

/// Self-contained line chart of bin-mean mIoU and MSE against severity.
std::string curves_svg(const EvalReport& report, int n_bins);

}  // namespace rclevr::eval
