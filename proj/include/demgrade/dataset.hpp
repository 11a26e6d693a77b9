#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "demgrade/image.hpp"

namespace demgrade {

// Fixed class order (alphabetical) so label indices are stable everywhere,
// even when a class directory is absent from a particular archive.
inline const std::array<std::string, 4> kClassNames = {
    "MildDemented", "ModerateDemented", "NonDemented", "VeryMildDemented"};

// Expected on-disk resolution of archive images; other sizes are accepted,
// resized from whatever they are, and counted.
inline constexpr int kExpectedSide = 128;

struct Sample {
    Image image;
    int class_label = 0;
    std::string relative_path;  // "<ClassName>/<file>", '/' separated
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;
    size_t nonstandard_size_count = 0;

    std::vector<int> labels() const;
    std::vector<size_t> class_counts() const;
};

// Loads `root/<ClassName>/<file>.{png,jpg,jpeg}` into memory. Samples are
// ordered by (class name, file name) lexicographically, independent of
// filesystem enumeration order. Directory names may use underscores or
// different casing ("Mild_Demented" maps to "MildDemented").
Dataset load_dataset(const std::filesystem::path& root);

// Box/area downscale-or-upscale: each output pixel is the rounded
// area-weighted mean of its source rectangle.
Image resize_area(const Image& img, int out_w, int out_h);

struct SplitRatios {
    double train = 0.8;
    double validation = 0.0;
    double test = 0.2;
};

struct SplitPartition {
    std::vector<size_t> train;
    std::vector<size_t> validation;
    std::vector<size_t> test;
    uint64_t seed = 0;
};

// Seeded per-class split. Each class is shuffled with SplitMix64 seeded by
// derive_seed(seed, class_index), then apportioned by largest remainder;
// every nonzero part is guaranteed at least one sample per class.
SplitPartition stratified_split(const std::vector<int>& labels_by_index, int n_classes,
                                const SplitRatios& ratios, uint64_t seed,
                                const std::vector<std::string>* class_names = nullptr);
SplitPartition stratified_split(const Dataset& ds, const SplitRatios& ratios, uint64_t seed);

}  // namespace demgrade
