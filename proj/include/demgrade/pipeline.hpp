#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "demgrade/cnn.hpp"
#include "demgrade/dataset.hpp"
#include "demgrade/eval.hpp"
#include "demgrade/manifest.hpp"
#include "demgrade/model_io.hpp"
#include "demgrade/rf.hpp"
#include "demgrade/svm.hpp"
#include "demgrade/watershed.hpp"

namespace demgrade {

enum class ModelKind { rf, svm, cnn };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct SvmTrainConfig {
    KernelParams kernel;
    int max_passes = 200;
    uint64_t seed = 0;
    MulticlassStrategy strategy = MulticlassStrategy::one_vs_one;

    bool operator==(const SvmTrainConfig&) const = default;
};

struct SplitSpec {
    std::optional<SplitRatios> ratios;  // absent: 80/0/20 for rf & svm, 70/10/20 for cnn
    uint64_t seed = 0;
};

struct ExperimentConfig {
    std::string dataset_root;
    std::string output_dir = "out";
    int resolution = 32;
    bool watershed = false;
    WatershedParams watershed_params;
    bool augment = false;
    ModelKind model = ModelKind::rf;
    RfConfig rf;
    SvmTrainConfig svm;
    CnnConfig cnn;
    SplitSpec split;
};

// Config file parsing; flags in the CLI override these values.
ExperimentConfig config_from_json_file(const std::filesystem::path& path);
// Canonical (sorted-key, output-dir-free) form used for hashing and reports.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

SplitRatios effective_ratios(const ExperimentConfig& cfg);
FeaturePipeline feature_pipeline_of(const ExperimentConfig& cfg);

// Feature extraction shared by training and evaluation: resize to the
// working resolution, optionally replace with the watershed feature image,
// then flatten to [0,1] vectors and/or tensors.
struct BuiltFeatures {
    FeatureMatrix X;
    std::vector<Tensor<float>> tensors;
    std::vector<int> labels;
    size_t degenerate_count = 0;
};
BuiltFeatures build_features(const Dataset& ds, const FeaturePipeline& pipeline, bool want_matrix,
                             bool want_tensors);

struct RunReport {
    std::string config_hash;
    SplitPartition partition;
    size_t degenerate_count = 0;
    ScoreCard card;
    ConfusionMatrix confusion;
    std::map<std::string, double> timing_ms;
    std::filesystem::path output_dir;
    std::string model_file;      // relative to output_dir
    std::string report_file;     // "report.json"
    std::string scorecard_file;  // "scorecard.json"
};

// Ingest -> features -> split -> train -> evaluate -> persist, end-to-end
// deterministic for a fixed config. Errors carry the failing phase.
RunReport run_experiment(const ExperimentConfig& cfg);

// The six-configuration table: {RF, WS+RF, SVM, WS+SVM, CNN, WS+CNN} with a
// shared split seed. Each run persists under output_dir/<slug>; the rows are
// also written as comparison.csv / comparison.txt. Partial results stay on
// disk if a sub-run fails.
std::vector<ComparisonRow> compare_all(const ExperimentConfig& base);

// Reference scores for the 6400-image archive, used by the optional
// `compare --check-reference` report.
std::vector<ComparisonRow> reference_results();

struct EvaluateResult {
    ScoreCard card;
    ConfusionMatrix cm;
    size_t degenerate_count = 0;
    std::vector<int> predictions;
};
// Applies the model's stored feature pipeline to the dataset and scores it.
EvaluateResult evaluate_model(const SavedModel& saved, const Dataset& ds);

struct SegmentOptions {
    int resolution = 32;
    WatershedParams params;
    std::string dump_steps_dir;  // empty: no intermediate dumps
};
// Writes per-sample watershed feature images as PGM plus an updated manifest
// (returned and written to out_dir/manifest.json).
Manifest segment_dataset(const Manifest& input, const std::filesystem::path& out_dir,
                         const SegmentOptions& options);

// Four-class geometric mini-dataset (disc / annulus / square / cross) used
// for CI and demos; grayscale PNGs under root/<ClassName>/.
void synthesize_dataset(const std::filesystem::path& out_root, int per_class = 20,
                        uint64_t seed = 0, int image_size = 128);

}  // namespace demgrade
