#include "rclevr/ops/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rclevr/core/error.hpp"
#include "rclevr/core/random.hpp"

namespace rclevr::ops {
namespace {

constexpr double kBlurIdentityEps = 1e-9;
constexpr double kGlareThreshold = 0.8;
constexpr int kMotionTaps = 16;
constexpr int kZoomTaps = 8;
constexpr int kCloudOctaves = 4;
constexpr double kCloudPersistence = 0.5;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

/// Reflect-101 index folding (d c b | a b c d | c b a).
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Bilinear sample at continuous pixel coordinates (pixel centers on
/// integers), clamping to the edge.
double sample_bilinear(const Image& img, double x, double y, int c) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

Image apply_gamma(const Image& in, double gamma) {
  Image out = in;
  for (float& v : out.data()) v = clamp01(std::pow(static_cast<double>(v), gamma));
  return out;
}

Image apply_defocus(const Image& in, double radius) {
  struct Tap {
    int dx, dy;
    double w;
  };
  std::vector<Tap> taps;
  const int reach = static_cast<int>(std::ceil(radius + 0.5));
  double total = 0.0;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      // Coverage-style soft edge keeps the kernel continuous in the radius.
      const double w = std::clamp(radius + 0.5 - std::hypot(dx, dy), 0.0, 1.0);
      if (w > 0) {
        taps.push_back({dx, dy, w});
        total += w;
      }
    }
  }
  for (auto& t : taps) t.w /= total;

  const int w = in.width();
  const int h = in.height();
  std::vector<int> xs(static_cast<std::size_t>(w + 2 * reach));
  std::vector<int> ys(static_cast<std::size_t>(h + 2 * reach));
  for (int i = 0; i < w + 2 * reach; ++i) xs[static_cast<std::size_t>(i)] = reflect(i - reach, w);
  for (int i = 0; i < h + 2 * reach; ++i) ys[static_cast<std::size_t>(i)] = reflect(i - reach, h);

  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& t : taps) {
        const int sx = xs[static_cast<std::size_t>(x + t.dx + reach)];
        const int sy = ys[static_cast<std::size_t>(y + t.dy + reach)];
        for (int c = 0; c < 3; ++c) acc[c] += t.w * in.at(sx, sy, c);
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(acc[c]);
    }
  }
  return out;
}

Image apply_motion(const Image& in, double distance, double zoom) {
  Image stage = in;
  const int w = in.width();
  const int h = in.height();
  if (distance > 0) {
    const double span = distance * w;
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int i = 0; i < kMotionTaps; ++i) {
            const double shift = (static_cast<double>(i) / (kMotionTaps - 1) - 0.5) * span;
            acc += sample_bilinear(stage, x - shift, y, c);
          }
          out.at(x, y, c) = clamp01(acc / kMotionTaps);
        }
      }
    }
    stage = std::move(out);
  }
  if (zoom > 0) {
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int j = 0; j < kZoomTaps; ++j) {
            const double s = 1.0 + zoom * static_cast<double>(j) / (kZoomTaps - 1);
            acc += sample_bilinear(stage, cx + (x - cx) / s, cy + (y - cy) / s, c);
          }
          out.at(x, y, c) = clamp01(acc / kZoomTaps);
        }
      }
    }
    stage = std::move(out);
  }
  return stage;
}

Image apply_lens(const Image& in, double distort, double disperse) {
  const int w = in.width();
  const int h = in.height();
  const double half_diag = std::hypot(w, h) / 2.0;
  const std::array<double, 3> k{distort * (1.0 + 0.5 * disperse), distort, distort * (1.0 - 0.5 * disperse)};
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5 - w / 2.0) / half_diag;
      const double v = (y + 0.5 - h / 2.0) / half_diag;
      const double r2 = u * u + v * v;
      for (int c = 0; c < 3; ++c) {
        const double scale = 1.0 + k[static_cast<std::size_t>(c)] * r2;
        const double sx = u * scale * half_diag + w / 2.0 - 0.5;
        const double sy = v * scale * half_diag + h / 2.0 - 0.5;
        out.at(x, y, c) = clamp01(sample_bilinear(in, sx, sy, c));
      }
    }
  }
  return out;
}

Image apply_noise(const Image& in, double scale, std::uint64_t seed) {
  Image out = in;
  Rng rng(seed);
  for (float& v : out.data()) v = clamp01(v + scale * rng.normal());
  return out;
}

Image apply_clouds(const Image& in, double factor, std::uint64_t seed) {
  const auto field = cloud_field(in.width(), in.height(), seed);
  Image out = in;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      const double n = field[static_cast<std::size_t>(y) * static_cast<std::size_t>(in.width()) +
                             static_cast<std::size_t>(x)];
      const double f = factor * n;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(in.at(x, y, c) * (1.0 - f) + f);
    }
  }
  return out;
}

Image apply_glare(const Image& in, double mix) {
  const double weight = mix + 0.5;
  Image bright = in;
  for (float& v : bright.data()) v = static_cast<float>(std::max(0.0, (v - kGlareThreshold) / (1.0 - kGlareThreshold)));
  const Image glow = gaussian_blur(bright, in.width() / 32.0);
  Image out = in;
  const auto g = glow.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = clamp01(o[i] + weight * g[i]);
  return out;
}

}  // namespace

double OperatorParams::get(std::string_view param) const {
  const auto idx = param_index(op, param);
  if (!idx) throw DomainError("operator " + std::string(operator_name(op)) + " has no parameter '" + std::string(param) + "'");
  return values[*idx];
}

OperatorParams OperatorParams::identity(OperatorId op) noexcept {
  OperatorParams p{op, {}};
  const auto params = spec_of(op).params();
  for (std::size_t i = 0; i < params.size(); ++i) p.values[i] = params[i].identity;
  return p;
}

OperatorParams make_params(OperatorId op, const std::map<std::string, double>& values, std::vector<ClampNote>* notes) {
  OperatorParams out{op, {}};
  const auto params = spec_of(op).params();
  for (const auto& [name, _] : values) {
    if (!param_index(op, name)) {
      throw DomainError("operator " + std::string(operator_name(op)) + " has no parameter '" + name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name(params[i].name);
    const auto it = values.find(name);
    if (it == values.end()) throw DomainError("missing parameter '" + name + "' for " + std::string(operator_name(op)));
    const double raw = it->second;
    if (!std::isfinite(raw)) throw DomainError("parameter '" + name + "' is not finite");
    const double clamped = std::clamp(raw, params[i].min, params[i].max);
    if (clamped != raw && notes != nullptr) notes->push_back({name, raw, clamped});
    out.values[i] = clamped;
  }
  return out;
}

void check_domain(const OperatorParams& p) {
  const auto params = spec_of(p.op).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = p.values[i];
    if (!std::isfinite(v) || v < params[i].min || v > params[i].max) {
      throw DomainError(std::string(operator_name(p.op)) + "." + std::string(params[i].name) + " = " +
                        std::to_string(v) + " outside [" + std::to_string(params[i].min) + ", " +
                        std::to_string(params[i].max) + "]");
    }
  }
}

double defocus_radius(double z, double f_stop) noexcept { return 1.5 * (z - 1.0) * (128.0 / f_stop); }

bool is_identity(const OperatorParams& p) {
  const auto& v = p.values;
  switch (p.op) {
    case OperatorId::Clean: return true;
    case OperatorId::Gamma: return v[0] == 1.0;
    case OperatorId::Blur: return v[0] <= 1.0 + kBlurIdentityEps;
    case OperatorId::Defocus: return defocus_radius(v[0], v[1]) < 0.5;
    case OperatorId::Lens: return v[0] == 0.0;
    case OperatorId::Motion: return v[0] == 0.0 && v[1] == 0.0;
    case OperatorId::Noise: return v[0] == 0.0;
    case OperatorId::Clouds: return v[0] == 0.0;
    case OperatorId::Glare: return v[0] == -0.5;
  }
  return false;
}

Image apply(OperatorId op, const Image& image, const OperatorParams& params, std::uint64_t noise_seed) {
  if (params.op != op) throw DomainError("params were built for a different operator");
  if (image.empty()) throw ShapeMismatch("cannot corrupt an empty image");
  check_domain(params);
  if (is_identity(params)) return image;
  const auto& v = params.values;
  switch (op) {
    case OperatorId::Clean: return image;
    case OperatorId::Gamma: return apply_gamma(image, v[0]);
    case OperatorId::Blur: return gaussian_blur(image, v[0]);
    case OperatorId::Defocus: return apply_defocus(image, defocus_radius(v[0], v[1]));
    case OperatorId::Lens: return apply_lens(image, v[0], v[1]);
    case OperatorId::Motion: return apply_motion(image, v[0], v[1]);
    case OperatorId::Noise: return apply_noise(image, v[0], noise_seed);
    case OperatorId::Clouds: return apply_clouds(image, v[0], noise_seed);
    case OperatorId::Glare: return apply_glare(image, v[0]);
  }
  return image;
}

Image gaussian_blur(const Image& in, double sigma) {
  if (sigma <= 0) return in;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& k : kernel) k /= total;

  const int w = in.width();
  const int h = in.height();
  std::vector<double> tmp(in.size());
  auto tmp_at = [&](int x, int y, int c) -> double& {
    return tmp[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3 +
               static_cast<std::size_t>(c)];
  };
  std::vector<int> xs(static_cast<std::size_t>(w + 2 * radius));
  std::vector<int> ys(static_cast<std::size_t>(h + 2 * radius));
  for (int i = 0; i < w + 2 * radius; ++i) xs[static_cast<std::size_t>(i)] = reflect(i - radius, w);
  for (int i = 0; i < h + 2 * radius; ++i) ys[static_cast<std::size_t>(i)] = reflect(i - radius, h);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * in.at(xs[static_cast<std::size_t>(x + k + radius)], y, c);
        }
        tmp_at(x, y, c) = acc;
      }
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * tmp_at(x, ys[static_cast<std::size_t>(y + k + radius)], c);
        }
        out.at(x, y, c) = clamp01(acc);
      }
    }
  }
  return out;
}

std::vector<float> cloud_field(int width, int height, std::uint64_t seed) {
  std::vector<float> field(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f);
  const double base_period = std::max(1.0, width / 4.0);
  auto lattice = [&](int octave, std::int64_t ix, std::int64_t iy) {
    const std::uint64_t h = derive_seed({seed, static_cast<std::uint64_t>(octave), static_cast<std::uint64_t>(ix),
                                         static_cast<std::uint64_t>(iy)});
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  double amp_total = 0.0;
  double amp = 1.0;
  for (int o = 0; o < kCloudOctaves; ++o) {
    amp_total += amp;
    amp *= kCloudPersistence;
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      double a = 1.0;
      double period = base_period;
      for (int o = 0; o < kCloudOctaves; ++o) {
        const double fx = (x + 0.5) / period;
        const double fy = (y + 0.5) / period;
        const auto ix = static_cast<std::int64_t>(std::floor(fx));
        const auto iy = static_cast<std::int64_t>(std::floor(fy));
        double tx = fx - static_cast<double>(ix);
        double ty = fy - static_cast<double>(iy);
        tx = tx * tx * (3.0 - 2.0 * tx);
        ty = ty * ty * (3.0 - 2.0 * ty);
        const double n00 = lattice(o, ix, iy);
        const double n10 = lattice(o, ix + 1, iy);
        const double n01 = lattice(o, ix, iy + 1);
        const double n11 = lattice(o, ix + 1, iy + 1);
        const double top = n00 + (n10 - n00) * tx;
        const double bottom = n01 + (n11 - n01) * tx;
        acc += a * (top + (bottom - top) * ty);
        a *= kCloudPersistence;
        period /= 2.0;
      }
      field[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
          static_cast<float>(std::clamp(acc / amp_total, 0.0, 1.0));
    }
  }
  return field;
}

}  // namespace rclevr::ops
