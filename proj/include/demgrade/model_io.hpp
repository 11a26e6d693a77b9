#pragma once

#include <filesystem>
#include <variant>

#include "demgrade/cnn.hpp"
#include "demgrade/rf.hpp"
#include "demgrade/svm.hpp"
#include "demgrade/watershed.hpp"

namespace demgrade {

inline constexpr int kModelFormatVersion = 1;

// How feature vectors are produced from raw images; stored with every model
// so evaluation is self-contained.
struct FeaturePipeline {
    int resolution = 32;
    bool watershed = false;
    WatershedParams watershed_params;
    bool augment = false;  // concatenate raw + overlay features (rf/svm only)

    bool operator==(const FeaturePipeline&) const = default;
};

using AnyModel = std::variant<ForestModel, SvmModel, CnnModel>;

struct SavedModel {
    FeaturePipeline pipeline;
    AnyModel model;
};

// Persists the model at `json_path`. Random forests are one JSON document;
// SVMs add `<path>.vecs` (support-vector rows, little-endian float32); CNNs
// add `<path>.weights` (parameters in layer order, weights before biases,
// little-endian float32). Every file is digest-checked on load.
void save_model(const SavedModel& saved, const std::filesystem::path& json_path);
SavedModel load_model(const std::filesystem::path& json_path);

const char* model_kind_name(const AnyModel& model);

}  // namespace demgrade
