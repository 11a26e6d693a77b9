#include "demgrade/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "demgrade/errors.hpp"

namespace demgrade {

Image::Image(int w, int h, uint8_t fill)
    : width(w), height(h), pixels(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {
    if (w < 1 || h < 1) throw ArgumentError("image dimensions must be at least 1x1");
}

uint8_t luma_from_rgb(uint8_t r, uint8_t g, uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const long rounded = std::lround(y);
    return static_cast<uint8_t>(rounded < 0 ? 0 : (rounded > 255 ? 255 : rounded));
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PathError("cannot open file for writing: " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw PathError("failed writing PGM: " + path.string());
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
int next_pgm_token(std::istream& in, const std::filesystem::path& path) {
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw DecodeError("truncated PGM header", path.string());
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw DecodeError("malformed PGM header", path.string());
    return value;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PathError("cannot open file: " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw DecodeError("not a P5 PGM file", path.string());
    const int width = next_pgm_token(in, path);
    const int height = next_pgm_token(in, path);
    const int maxval = next_pgm_token(in, path);
    if (width < 1 || height < 1) throw DecodeError("invalid PGM dimensions", path.string());
    if (maxval != 255) throw DecodeError("unsupported PGM maxval (expected 255)", path.string());
    in.get();  // single whitespace byte after maxval
    Image img(width, height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw DecodeError("truncated PGM pixel data", path.string());
    return img;
}

}  // namespace demgrade
