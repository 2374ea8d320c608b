#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rclevr::ops {

/// RGB raster, row-major, interleaved channels, values in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * kChannels +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Rounds every value to the nearest multiple of 1/255, the 8-bit grid
/// used on disk.
Image quantize8(const Image& img);

/// Mean squared difference on the [0, 1] scale. Throws ShapeMismatch.
double mse_unit(const Image& a, const Image& b);

/// PSNR in dB on [0, 1] data, capped at kPsnrCap (also used for identical
/// images). Throws ShapeMismatch.
double psnr(const Image& a, const Image& b);

inline constexpr double kPsnrCap = 100.0;

}  // namespace rclevr::ops
