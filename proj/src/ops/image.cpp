#include "rclevr/ops/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rclevr/core/error.hpp"

namespace rclevr::ops {

Image::Image(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw ShapeMismatch("image dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels, fill);
}

Image quantize8(const Image& img) {
  Image out = img;
  for (float& v : out.data()) {
    const double q = std::round(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
    v = static_cast<float>(q / 255.0);
  }
  return out;
}

double mse_unit(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeMismatch("image shapes differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                        " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(da.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse_unit(a, b);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

}  // namespace rclevr::ops
