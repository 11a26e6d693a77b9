#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "demgrade/errors.hpp"

namespace demgrade {

// Dense row-major sample matrix: one row per sample.
struct FeatureMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    FeatureMatrix() = default;
    FeatureMatrix(size_t r, size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    std::span<const double> row(size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<double> row(size_t i) { return {values.data() + i * cols, cols}; }
    double at(size_t r, size_t c) const { return values[r * cols + c]; }
    double& at(size_t r, size_t c) { return values[r * cols + c]; }

    void push_row(std::span<const double> r) {
        if (cols == 0) cols = r.size();
        if (r.size() != cols) throw ArgumentError("feature vector length mismatch");
        values.insert(values.end(), r.begin(), r.end());
        rows++;
    }
};

}  // namespace demgrade
