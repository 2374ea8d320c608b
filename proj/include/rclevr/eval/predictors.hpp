#pragma once

#include <filesystem>

#include "rclevr/ops/image.hpp"
#include "rclevr/scene/scene.hpp"

namespace rclevr::eval {

/// Color-threshold segmenter: each pixel within `tolerance` (RGB distance)
/// of a palette color takes that color's class, everything else is
/// background; 4-connected components of a class become objects, and
/// components under `min_component` pixels are dropped. Deliberately
/// fragile under blur, noise, and color shifts.
struct ThresholdSegmenter {
  std::vector<scene::Rgb> palette = scene::SceneConfig::default_palette();
  scene::Rgb background = scene::SceneConfig::default_background();
  double tolerance = 0.10;
  int min_component = 32;

  scene::MaskMap segment(const ops::Image& image) const;
};

enum class ReferencePredictor { Oracle, Threshold };

/// Writes a prediction set for every scene and variant of a dataset.
/// Oracle: ground-truth masks, clean reconstruction. Threshold: segmenter
/// masks, the input image as reconstruction.
void write_predictions(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
                       ReferencePredictor kind, const ThresholdSegmenter& segmenter = {}, int workers = 1);

}  // namespace rclevr::eval
