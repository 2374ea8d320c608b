#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rclevr/ops/image.hpp"
#include "rclevr/scene/scene.hpp"

namespace rclevr::io {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit RGB PNG of the image (values rounded to the 1/255 grid).
Bytes encode_png(const ops::Image& image);

/// 8-bit grayscale PNG whose pixel values are the labels. Throws IoError if
/// any label falls outside [0, 255].
Bytes encode_mask_png(const scene::MaskMap& mask);

ops::Image decode_png(const Bytes& bytes);
scene::MaskMap decode_mask_png(const Bytes& bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

ops::Image read_png(const std::filesystem::path& path);
scene::MaskMap read_mask_png(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(const Bytes& bytes);
std::string sha256_hex(std::string_view text);

}  // namespace rclevr::io
