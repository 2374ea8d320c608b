#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rclevr/ops/image.hpp"

namespace rclevr::scene {

using Rgb = std::array<float, 3>;

enum class Shape { Circle, Square, Triangle };

std::string_view shape_name(Shape s) noexcept;
Shape shape_from_name(std::string_view name);  // throws ConfigError

/// Integer label raster: 0 = background, 1..K = objects.
struct MaskMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;

  MaskMap() = default;
  MaskMap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

  std::int32_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }

  /// Number of distinct nonzero labels.
  int object_count() const;

  bool operator==(const MaskMap&) const = default;
};

struct SceneConfig {
  int width = 128;
  int height = 128;
  int min_objects = 3;
  int max_objects = 6;
  std::vector<Shape> shapes{Shape::Circle, Shape::Square, Shape::Triangle};
  double min_size = 8.0;  // circle radius / half side / triangle circumradius, px
  double max_size = 20.0;
  std::vector<Rgb> palette = default_palette();
  Rgb background = default_background();
  bool allow_occlusion = true;
  bool distinct_colors = true;  // no two objects of a scene share a palette color

  static std::vector<Rgb> default_palette();
  static Rgb default_background();

  /// Throws ConfigError for impossible configurations.
  void validate() const;
};

struct SceneObject {
  Shape shape;
  double cx;
  double cy;
  double size;
  double rotation;  // radians; squares and triangles only
  int color;        // palette index
};

struct SceneMetadata {
  std::int64_t scene_id = 0;
  std::vector<SceneObject> objects;  // visible objects, label i + 1, back to front
};

struct Scene {
  ops::Image image;
  MaskMap mask;
  SceneMetadata metadata;
};

bool contains(const SceneObject& obj, double x, double y);

/// Renders objects back to front. Image uses 2x2 supersampling, the mask is
/// sampled at pixel centers. Objects with no visible pixel are dropped and
/// the remaining labels compacted in draw order.
Scene render_objects(int width, int height, const std::vector<SceneObject>& objects,
                     const std::vector<Rgb>& palette, const Rgb& background);

/// Deterministic in (config, scene_id, global_seed); pure and thread-safe.
Scene generate_scene(const SceneConfig& config, std::int64_t scene_id, std::uint64_t global_seed);

}  // namespace rclevr::scene
