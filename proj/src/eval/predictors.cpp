#include "rclevr/eval/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rclevr/core/parallel.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/io/png.hpp"

namespace rclevr::eval {

namespace fs = std::filesystem;

scene::MaskMap ThresholdSegmenter::segment(const ops::Image& image) const {
  const int w = image.width();
  const int h = image.height();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const double tol2 = tolerance * tolerance;

  // Class per pixel: 0 background, k + 1 for palette entry k.
  std::vector<int> cls(n, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto dist2 = [&](const scene::Rgb& c) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double diff = image.at(x, y, k) - c[static_cast<std::size_t>(k)];
          d += diff * diff;
        }
        return d;
      };
      double best = dist2(background);
      int best_cls = 0;
      for (std::size_t k = 0; k < palette.size(); ++k) {
        const double d = dist2(palette[k]);
        if (d < best) {
          best = d;
          best_cls = static_cast<int>(k) + 1;
        }
      }
      if (best_cls != 0 && best <= tol2) cls[static_cast<std::size_t>(y) * w + x] = best_cls;
    }
  }

  std::vector<std::int32_t> comp(n, 0);
  std::vector<std::size_t> sizes{0};
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (cls[start] == 0 || comp[start] != 0) continue;
    const auto id = static_cast<std::int32_t>(sizes.size());
    std::size_t size = 0;
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int px = static_cast<int>(p % static_cast<std::size_t>(w));
      const int py = static_cast<int>(p / static_cast<std::size_t>(w));
      const int nx[4] = {px - 1, px + 1, px, px};
      const int ny[4] = {py, py, py - 1, py + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (comp[q] == 0 && cls[q] == cls[start]) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
  }

  // Keep components of at least min_component pixels, at most 255 of them
  // (largest first) so the mask fits an 8-bit label image.
  std::vector<std::int32_t> keep;
  for (std::size_t c = 1; c < sizes.size(); ++c) {
    if (sizes[c] >= static_cast<std::size_t>(std::max(min_component, 1))) keep.push_back(static_cast<std::int32_t>(c));
  }
  if (keep.size() > 255) {
    std::stable_sort(keep.begin(), keep.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });
    keep.resize(255);
    std::sort(keep.begin(), keep.end());
  }
  std::vector<std::int32_t> relabel(sizes.size(), 0);
  for (std::size_t i = 0; i < keep.size(); ++i) relabel[static_cast<std::size_t>(keep[i])] = static_cast<std::int32_t>(i + 1);

  scene::MaskMap mask(w, h);
  for (std::size_t p = 0; p < n; ++p) mask.labels[p] = relabel[static_cast<std::size_t>(comp[p])];
  return mask;
}

void write_predictions(const fs::path& dataset_dir, const fs::path& out_dir, ReferencePredictor kind,
                       const ThresholdSegmenter& segmenter, int workers) {
  const auto m = dataset::load_manifest(dataset_dir);
  fs::create_directories(out_dir / "scenes");
  parallel_for(static_cast<std::int64_t>(m.scenes.size()), workers, [&](std::int64_t index) {
    const auto& s = m.scenes[static_cast<std::size_t>(index)];
    std::vector<std::pair<std::string, std::string>> variants{{"clean", s.clean.path}};
    for (const auto& node : m.node_order) variants.emplace_back(node, s.corrupt.at(node).path);
    const fs::path base = out_dir / "scenes" / std::to_string(s.scene_id);
    for (const auto& [variant, input] : variants) {
      const fs::path dir = base / variant;
      fs::create_directories(dir);
      if (kind == ReferencePredictor::Oracle) {
        fs::copy_file(dataset_dir / s.mask.path, dir / "pred_masks.png", fs::copy_options::overwrite_existing);
        fs::copy_file(dataset_dir / s.clean.path, dir / "recon.png", fs::copy_options::overwrite_existing);
      } else {
        const auto image = io::read_png(dataset_dir / input);
        io::write_file(dir / "pred_masks.png", io::encode_mask_png(segmenter.segment(image)));
        fs::copy_file(dataset_dir / input, dir / "recon.png", fs::copy_options::overwrite_existing);
      }
    }
  });
}

}  // namespace rclevr::eval
