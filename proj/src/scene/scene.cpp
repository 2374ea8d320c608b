#include "rclevr/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "rclevr/core/error.hpp"
#include "rclevr/core/random.hpp"

namespace rclevr::scene {
namespace {

constexpr int kPlacementAttempts = 100;
constexpr int kSceneReseeds = 50;

struct Box {
  double x0, y0, x1, y1;
};

Box bounds(const SceneObject& o) {
  // Square around the circumscribed circle; a square's corners sit at half side * sqrt(2).
  const double r = (o.shape == Shape::Square ? std::numbers::sqrt2 : 1.0) * o.size + 1.0;
  return {o.cx - r, o.cy - r, o.cx + r, o.cy + r};
}

bool overlaps(const Box& a, const Box& b) { return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1; }

std::vector<SceneObject> place_objects(const SceneConfig& cfg, Rng& rng) {
  const int span = cfg.max_objects - cfg.min_objects + 1;
  const int count = cfg.min_objects + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  std::vector<SceneObject> objects;
  for (int n = 0; n < count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      SceneObject o;
      o.shape = cfg.shapes[rng.below(cfg.shapes.size())];
      o.size = cfg.min_size + (cfg.max_size - cfg.min_size) * rng.uniform01();
      o.cx = o.size + (cfg.width - 2.0 * o.size) * rng.uniform01();
      o.cy = o.size + (cfg.height - 2.0 * o.size) * rng.uniform01();
      o.rotation = o.shape == Shape::Circle ? 0.0 : 2.0 * std::numbers::pi * rng.uniform01();
      if (cfg.distinct_colors) {
        std::vector<int> unused;
        for (int c = 0; c < static_cast<int>(cfg.palette.size()); ++c) {
          if (std::none_of(objects.begin(), objects.end(), [&](const auto& other) { return other.color == c; })) {
            unused.push_back(c);
          }
        }
        o.color = unused[rng.below(unused.size())];
      } else {
        o.color = static_cast<int>(rng.below(cfg.palette.size()));
      }
      if (!cfg.allow_occlusion) {
        const Box b = bounds(o);
        if (std::any_of(objects.begin(), objects.end(), [&](const auto& other) { return overlaps(b, bounds(other)); })) {
          continue;
        }
      }
      objects.push_back(o);
      placed = true;
    }
    if (!placed) return {};
  }
  return objects;
}

}  // namespace

std::string_view shape_name(Shape s) noexcept {
  switch (s) {
    case Shape::Circle: return "circle";
    case Shape::Square: return "square";
    case Shape::Triangle: return "triangle";
  }
  return "circle";
}

Shape shape_from_name(std::string_view name) {
  for (Shape s : {Shape::Circle, Shape::Square, Shape::Triangle}) {
    if (shape_name(s) == name) return s;
  }
  throw ConfigError("unknown shape '" + std::string(name) + "'");
}

int MaskMap::object_count() const {
  std::set<std::int32_t> ids;
  for (auto l : labels) {
    if (l != 0) ids.insert(l);
  }
  return static_cast<int>(ids.size());
}

std::vector<Rgb> SceneConfig::default_palette() {
  return {
      Rgb{0.80f, 0.15f, 0.15f},  // red
      Rgb{0.15f, 0.30f, 0.85f},  // blue
      Rgb{0.15f, 0.65f, 0.20f},  // green
      Rgb{0.95f, 0.85f, 0.20f},  // yellow
      Rgb{0.55f, 0.20f, 0.70f},  // purple
      Rgb{0.20f, 0.80f, 0.85f},  // cyan
      Rgb{0.55f, 0.35f, 0.15f},  // brown
      Rgb{0.95f, 0.95f, 0.95f},  // white
  };
}

Rgb SceneConfig::default_background() { return Rgb{0.45f, 0.45f, 0.45f}; }

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("canvas dimensions must be positive");
  if (min_objects < 1) throw ConfigError("min_objects must be >= 1");
  if (max_objects < min_objects) throw ConfigError("max_objects must be >= min_objects");
  if (max_objects > 255) throw ConfigError("at most 255 objects fit in an 8-bit mask");
  if (!(min_size > 0) || max_size < min_size) throw ConfigError("size range must be positive and ordered");
  if (2.0 * max_size > std::min(width, height)) throw ConfigError("size range exceeds the canvas");
  if (shapes.empty()) throw ConfigError("shape set must be non-empty");
  if (palette.empty()) throw ConfigError("palette must be non-empty");
  if (distinct_colors && static_cast<std::size_t>(max_objects) > palette.size()) {
    throw ConfigError("distinct_colors needs at least max_objects palette entries");
  }
  for (const auto& c : palette) {
    for (float v : c) {
      if (!(v >= 0.0f && v <= 1.0f)) throw ConfigError("palette values must lie in [0, 1]");
    }
  }
}

bool contains(const SceneObject& o, double x, double y) {
  const double dx = x - o.cx;
  const double dy = y - o.cy;
  switch (o.shape) {
    case Shape::Circle: return dx * dx + dy * dy <= o.size * o.size;
    case Shape::Square: {
      const double c = std::cos(o.rotation);
      const double s = std::sin(o.rotation);
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      return std::abs(u) <= o.size && std::abs(v) <= o.size;
    }
    case Shape::Triangle: {
      // Equilateral triangle with circumradius `size`: inside all three edge
      // half-planes, each at distance size / 2 from the center.
      for (int k = 0; k < 3; ++k) {
        const double a = o.rotation + 2.0 * std::numbers::pi * k / 3.0;
        if (dx * std::cos(a) + dy * std::sin(a) > o.size / 2.0) return false;
      }
      return true;
    }
  }
  return false;
}

Scene render_objects(int width, int height, const std::vector<SceneObject>& objects, const std::vector<Rgb>& palette,
                     const Rgb& background) {
  std::vector<Box> boxes;
  for (const auto& o : objects) boxes.push_back(bounds(o));
  auto topmost = [&](double x, double y) -> int {
    for (int i = static_cast<int>(objects.size()) - 1; i >= 0; --i) {
      const Box& b = boxes[static_cast<std::size_t>(i)];
      if (x < b.x0 || x > b.x1 || y < b.y0 || y > b.y1) continue;
      if (contains(objects[static_cast<std::size_t>(i)], x, y)) return i;
    }
    return -1;
  };

  MaskMap raw(width, height);
  std::vector<char> visible(objects.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int top = topmost(x + 0.5, y + 0.5);
      raw.at(x, y) = top + 1;
      if (top >= 0) visible[static_cast<std::size_t>(top)] = 1;
    }
  }

  Scene scene;
  std::vector<std::int32_t> remap(objects.size() + 1, 0);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!visible[i]) continue;
    scene.metadata.objects.push_back(objects[i]);
    remap[i + 1] = static_cast<std::int32_t>(scene.metadata.objects.size());
  }
  scene.mask = MaskMap(width, height);
  for (std::size_t i = 0; i < raw.labels.size(); ++i) scene.mask.labels[i] = remap[static_cast<std::size_t>(raw.labels[i])];

  scene.image = ops::Image(width, height);
  static constexpr double kSub[2] = {0.25, 0.75};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (double sy : kSub) {
        for (double sx : kSub) {
          const int top = topmost(x + sx, y + sy);
          const Rgb& c = top < 0 ? background : palette[static_cast<std::size_t>(objects[static_cast<std::size_t>(top)].color)];
          for (int ch = 0; ch < 3; ++ch) acc[ch] += c[static_cast<std::size_t>(ch)];
        }
      }
      for (int ch = 0; ch < 3; ++ch) scene.image.at(x, y, ch) = static_cast<float>(acc[ch] / 4.0);
    }
  }
  return scene;
}

Scene generate_scene(const SceneConfig& config, std::int64_t scene_id, std::uint64_t global_seed) {
  config.validate();
  for (int reseed = 0; reseed < kSceneReseeds; ++reseed) {
    Rng rng(derive_seed({global_seed, static_cast<std::uint64_t>(scene_id), hash_name("scene"),
                         static_cast<std::uint64_t>(reseed)}));
    auto objects = place_objects(config, rng);
    if (objects.empty()) continue;
    Scene scene = render_objects(config.width, config.height, objects, config.palette, config.background);
    if (scene.metadata.objects.empty()) continue;
    scene.metadata.scene_id = scene_id;
    return scene;
  }
  throw ConfigError("could not place objects after repeated attempts; the canvas is too crowded");
}

}  // namespace rclevr::scene
