#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace demgrade {

// 2-D grayscale image, 8-bit intensities in row-major order.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    Image() = default;
    Image(int w, int h, uint8_t fill = 0);

    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }

    bool operator==(const Image&) const = default;
};

// ITU-R BT.601 luma, rounded to the nearest integer and clamped to [0, 255].
uint8_t luma_from_rgb(uint8_t r, uint8_t g, uint8_t b);

// Binary PGM (P5), maxval 255.
void write_pgm(const Image& img, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

}  // namespace demgrade
