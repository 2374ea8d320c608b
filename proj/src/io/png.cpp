#include "rclevr/io/png.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rclevr/core/error.hpp"

namespace rclevr::io {
namespace {

Bytes encode(const void* pixels, int width, int height, png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + img.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

Bytes decode(const Bytes& bytes, png_uint_32 format, int& width, int& height) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw IoError(std::string("PNG decode failed: ") + img.message);
  }
  img.format = format;
  Bytes out(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError(std::string("PNG decode failed: ") + img.message);
  }
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  return out;
}

}  // namespace

Bytes encode_png(const ops::Image& image) {
  Bytes pixels(image.size());
  const auto data = image.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = std::round(std::clamp(static_cast<double>(data[i]), 0.0, 1.0) * 255.0);
    pixels[i] = static_cast<std::uint8_t>(v);
  }
  return encode(pixels.data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

Bytes encode_mask_png(const scene::MaskMap& mask) {
  Bytes pixels(mask.labels.size());
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    const auto l = mask.labels[i];
    if (l < 0 || l > 255) throw IoError("label " + std::to_string(l) + " does not fit in an 8-bit mask");
    pixels[i] = static_cast<std::uint8_t>(l);
  }
  return encode(pixels.data(), mask.width, mask.height, PNG_FORMAT_GRAY);
}

ops::Image decode_png(const Bytes& bytes) {
  int w = 0;
  int h = 0;
  const Bytes pixels = decode(bytes, PNG_FORMAT_RGB, w, h);
  ops::Image img(w, h);
  auto data = img.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(pixels[i] / 255.0);
  return img;
}

scene::MaskMap decode_mask_png(const Bytes& bytes) {
  // Decoding raw gray keeps label values intact; colour PNGs would be
  // converted to luminance, which is not meaningful for labels.
  int w = 0;
  int h = 0;
  const Bytes pixels = decode(bytes, PNG_FORMAT_GRAY, w, h);
  scene::MaskMap mask(w, h);
  for (std::size_t i = 0; i < pixels.size(); ++i) mask.labels[i] = pixels[i];
  return mask;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  write_text(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

ops::Image read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

scene::MaskMap read_mask_png(const std::filesystem::path& path) { return decode_mask_png(read_file(path)); }

std::string sha256_hex(const Bytes& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) { return sha256_hex(Bytes(text.begin(), text.end())); }

}  // namespace rclevr::io
