#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "demgrade/image.hpp"

namespace demgrade {

// Decodes a PNG or JPEG byte stream to 8-bit grayscale. Single-channel
// sources pass intensities through; color sources are reduced with
// round(0.299 R + 0.587 G + 0.114 B) clamped to [0, 255]. Alpha is ignored.
Image decode_to_grayscale(std::span<const uint8_t> encoded);

// decode_to_grayscale on a file's bytes; errors carry the path.
Image decode_file_to_grayscale(const std::filesystem::path& path);

// Lossless 8-bit grayscale PNG.
std::vector<uint8_t> encode_png_gray(const Image& img);
void write_png_gray(const Image& img, const std::filesystem::path& path);

}  // namespace demgrade
