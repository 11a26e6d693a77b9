#pragma once

#include <cstdint>
#include <vector>

#include "demgrade/image.hpp"

namespace demgrade {

// Row-major boolean mask; true = foreground.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<size_t>(w) * static_cast<size_t>(h), fill ? 1 : 0) {}

    bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
    BinaryMask complement() const;

    bool operator==(const BinaryMask&) const = default;
};

// Per-pixel Euclidean distance to the nearest background pixel; exactly 0 on
// background.
struct DistanceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double max_value() const;
};

// 0 = unknown, 1 = background marker, >= 2 = object markers.
struct MarkerMap {
    int width = 0;
    int height = 0;
    std::vector<int32_t> labels;

    int32_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

// -1 = watershed boundary, >= 1 = basin label.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int32_t> labels;

    int32_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

// Segmentation knobs; defaults follow the canonical marker-watershed recipe.
struct WatershedParams {
    int open_iterations = 2;       // noise removal before marker extraction
    int dilate_iterations = 3;     // delimits the possible-foreground area
    double fg_ratio = 0.7;         // sure-foreground cut on the distance map
    int element_size = 3;          // odd square structuring element
    int component_connectivity = 8;  // marker labeling
    int flood_connectivity = 4;      // basin growth
    bool invert_threshold = false;   // flip which side of the threshold is foreground

    bool operator==(const WatershedParams&) const = default;
};

// Otsu's method over the 256-bin histogram: the returned level maximizes
// between-class variance; ties break toward the smallest level; a constant
// image yields that constant. Foreground is pixels > level (inverted when
// requested).
struct OtsuResult {
    int level = 0;
    BinaryMask mask;
};
OtsuResult otsu_threshold(const Image& img, bool invert = false);

enum class MorphOp { erode, dilate, open };

// Square-element morphology. Out-of-bounds neighbors count as background for
// both erode and dilate; open = erode xN then dilate xN.
BinaryMask morphology(const BinaryMask& mask, MorphOp op, int iterations, int element_size = 3);

// Exact Euclidean distance transform; the image border counts as background.
DistanceMap distance_transform(const BinaryMask& mask);

struct MarkerExtraction {
    MarkerMap markers;
    int object_count = 0;   // connected components found in sure_fg
    int overlap_count = 0;  // pixels claimed by both inputs (foreground wins)
};

// Connected components of sure_fg labeled 2, 3, ... in row-major order of
// each component's first pixel; sure_bg minus sure_fg labeled 1; rest 0.
MarkerExtraction extract_markers(const BinaryMask& sure_fg, const BinaryMask& sure_bg,
                                 int connectivity = 8);

// Meyer-style priority flooding seeded from the markers. The queue is keyed
// by (flood level, insertion sequence) where a pixel's flood level is the
// maximum of its own intensity and the level at which it was reached, so pop
// keys are non-decreasing. A popped pixel adjacent to exactly one basin joins
// it; adjacent to two or more distinct basins it becomes boundary (-1).
// pop_key_trace, when given, records the key of every pop.
LabelMap watershed_flood(const Image& img, const MarkerMap& markers, int connectivity = 4,
                         std::vector<int32_t>* pop_key_trace = nullptr);

// Everything the pipeline produces for one image, kept for audit dumps.
struct SegmentationResult {
    int otsu_level = 0;
    BinaryMask threshold_mask;
    BinaryMask opened;
    BinaryMask possible_fg;  // dilated mask; its complement is sure background
    BinaryMask sure_bg;
    DistanceMap distance;
    BinaryMask sure_fg;
    MarkerExtraction markers;
    LabelMap labels;
    Image features;
    bool degenerate = false;  // no object markers; features = unmodified input
};

SegmentationResult run_watershed(const Image& img, const WatershedParams& params);

// The feature image: the grayscale input with watershed boundary pixels
// overwritten to 255. Degenerate segmentations fall back to the input.
struct FeatureImage {
    Image image;
    bool degenerate = false;
};
FeatureImage watershed_features(const Image& img, const WatershedParams& params);

}  // namespace demgrade
