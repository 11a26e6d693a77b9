#include <algorithm>
#include <cmath>
#include <cstdio>

#include "demgrade/codec.hpp"
#include "demgrade/dataset.hpp"
#include "demgrade/errors.hpp"
#include "demgrade/pipeline.hpp"
#include "demgrade/rng.hpp"

namespace demgrade {

namespace {

uint8_t clamp_u8(int v) { return static_cast<uint8_t>(std::clamp(v, 0, 255)); }

// One image per (class, index): a bright motif on a dark noisy background.
Image synth_image(int class_index, int index, uint64_t seed, int size) {
    SplitMix64 rng(derive_seed(derive_seed(seed, static_cast<uint64_t>(class_index)),
                               static_cast<uint64_t>(index)));
    const int bg = 12 + static_cast<int>(rng.next_below(12));
    const int tone = 190 + static_cast<int>(rng.next_below(40));
    const double s = static_cast<double>(size);
    const double cx = s / 2.0 + (rng.next_double() - 0.5) * s / 10.0;
    const double cy = s / 2.0 + (rng.next_double() - 0.5) * s / 10.0;

    const double disc_r = s * (0.26 + 0.06 * rng.next_double());
    // Ring thickness must survive two 3x3 erosions at the 32x32 working
    // resolution, so the annulus stays chunky.
    const double outer = s * (0.30 + 0.06 * rng.next_double());
    const double inner = outer * 0.40;
    const double half = s * (0.20 + 0.06 * rng.next_double());
    const double arm_w = s * (0.09 + 0.03 * rng.next_double());
    const double arm_l = s * (0.32 + 0.06 * rng.next_double());

    Image img(size, size, clamp_u8(bg));
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            bool inside = false;
            switch (class_index) {
                case 0:  // filled disc
                    inside = dx * dx + dy * dy <= disc_r * disc_r;
                    break;
                case 1: {  // annulus
                    const double d2 = dx * dx + dy * dy;
                    inside = d2 <= outer * outer && d2 >= inner * inner;
                    break;
                }
                case 2:  // filled square
                    inside = std::abs(dx) <= half && std::abs(dy) <= half;
                    break;
                default:  // cross
                    inside = (std::abs(dx) <= arm_w && std::abs(dy) <= arm_l) ||
                             (std::abs(dy) <= arm_w && std::abs(dx) <= arm_l);
                    break;
            }
            if (inside) img.at(x, y) = clamp_u8(tone);
        }
    }
    for (uint8_t& p : img.pixels)
        p = clamp_u8(static_cast<int>(p) + static_cast<int>(rng.next_below(21)) - 10);
    return img;
}

}  // namespace

void synthesize_dataset(const std::filesystem::path& out_root, int per_class, uint64_t seed,
                        int image_size) {
    if (per_class < 1) throw ArgumentError("synthesize_dataset: per_class must be >= 1");
    if (image_size < 16) throw ArgumentError("synthesize_dataset: image_size must be >= 16");
    std::filesystem::create_directories(out_root);
    for (size_t c = 0; c < kClassNames.size(); ++c) {
        const auto dir = out_root / kClassNames[c];
        std::filesystem::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%04d.png", i);
            write_png_gray(synth_image(static_cast<int>(c), i, seed, image_size), dir / name);
        }
    }
}

}  // namespace demgrade
