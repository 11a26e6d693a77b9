#include "demgrade/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <json.hpp>

#include "demgrade/binio.hpp"
#include "demgrade/hash.hpp"
#include "demgrade/parallel.hpp"
#include "json_util.hpp"

namespace demgrade {

using nlohmann::json;

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::rf: return "rf";
        case ModelKind::svm: return "svm";
        case ModelKind::cnn: return "cnn";
    }
    return "rf";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "rf") return ModelKind::rf;
    if (name == "svm") return ModelKind::svm;
    if (name == "cnn") return ModelKind::cnn;
    throw ArgumentError("unknown model kind '" + name + "' (expected rf, svm or cnn)");
}

namespace {

// Re-throws the in-flight exception with a phase tag, preserving its type.
[[noreturn]] void rethrow_with_phase(const char* phase) {
    const std::string tag = std::string("[") + phase + "] ";
    try {
        throw;
    } catch (const PhaseError&) {
        throw;
    } catch (const PathError& e) {
        throw PathError(tag + e.what());
    } catch (const DecodeError& e) {
        throw DecodeError(tag + e.what(), e.path);
    } catch (const EmptyDatasetError& e) {
        throw EmptyDatasetError(tag + e.what());
    } catch (const StratifyError& e) {
        throw StratifyError(tag + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(tag + e.what());
    } catch (const MarkerError& e) {
        throw MarkerError(tag + e.what());
    } catch (const VersionError& e) {
        throw VersionError(tag + e.what());
    } catch (const CorruptModelError& e) {
        throw CorruptModelError(tag + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(tag + e.what());
    } catch (const Error& e) {
        throw PhaseError(phase, e.what());
    } catch (const std::exception& e) {
        throw PhaseError(phase, e.what());
    }
}

class PhaseTimer {
public:
    explicit PhaseTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    template <typename Fn>
    auto run(const char* phase, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                record(phase, start);
            } else {
                auto result = fn();
                record(phase, start);
                return result;
            }
        } catch (...) {
            record(phase, start);
            rethrow_with_phase(phase);
        }
    }

private:
    void record(const char* phase, std::chrono::steady_clock::time_point start) {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        sink_[phase] =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
    }

    std::map<std::string, double>& sink_;
};

double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

json scorecard_json(const ScoreCard& card) {
    json per_class = json::array();
    for (size_t c = 0; c < card.precision.size(); ++c) {
        per_class.push_back({{"precision", round4(card.precision[c])},
                             {"recall", round4(card.recall[c])},
                             {"f1", round4(card.f1[c])},
                             {"support", card.support[c]},
                             {"precision_undefined", static_cast<bool>(card.precision_undefined[c])},
                             {"recall_undefined", static_cast<bool>(card.recall_undefined[c])}});
    }
    return {{"accuracy", round4(card.accuracy)},
            {"per_class", std::move(per_class)},
            {"macro",
             {{"precision", round4(card.macro_precision)},
              {"recall", round4(card.macro_recall)},
              {"f1", round4(card.macro_f1)}}},
            {"weighted",
             {{"precision", round4(card.weighted_precision)},
              {"recall", round4(card.weighted_recall)},
              {"f1", round4(card.weighted_f1)}}}};
}

json split_spec_json(const SplitSpec& split) {
    json j;
    j["seed"] = split.seed;
    if (split.ratios)
        j["ratios"] = {split.ratios->train, split.ratios->validation, split.ratios->test};
    else
        j["ratios"] = nullptr;
    return j;
}

const char* strategy_name(MulticlassStrategy s) {
    return s == MulticlassStrategy::one_vs_rest ? "ovr" : "ovo";
}

MulticlassStrategy strategy_from_name(const std::string& name) {
    if (name == "ovo") return MulticlassStrategy::one_vs_one;
    if (name == "ovr") return MulticlassStrategy::one_vs_rest;
    throw ArgumentError("unknown svm strategy '" + name + "' (expected ovo or ovr)");
}

json svm_config_json(const SvmTrainConfig& c) {
    return {{"kernel", jsonutil::to_json(c.kernel)},
            {"max_passes", c.max_passes},
            {"seed", c.seed},
            {"strategy", strategy_name(c.strategy)}};
}

json watershed_config_json(const ExperimentConfig& cfg) {
    json j = jsonutil::to_json(cfg.watershed_params);
    j["enabled"] = cfg.watershed;
    return j;
}

}  // namespace

ExperimentConfig config_from_json_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file_text(path));
    } catch (const json::exception& e) {
        throw DecodeError("config is not valid JSON: " + std::string(e.what()), path.string());
    }
    ExperimentConfig cfg;
    cfg.dataset_root = doc.value("dataset_root", cfg.dataset_root);
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.resolution = doc.value("resolution", cfg.resolution);
    cfg.augment = doc.value("augment", cfg.augment);
    if (doc.contains("model")) cfg.model = model_kind_from_name(doc.at("model").get<std::string>());
    if (doc.contains("watershed")) {
        const json& w = doc.at("watershed");
        cfg.watershed = w.value("enabled", cfg.watershed);
        cfg.watershed_params = jsonutil::watershed_params_from(w);
    }
    if (doc.contains("split")) {
        const json& s = doc.at("split");
        cfg.split.seed = s.value("seed", cfg.split.seed);
        if (s.contains("ratios") && !s.at("ratios").is_null()) {
            const auto r = s.at("ratios").get<std::vector<double>>();
            if (r.size() != 3) throw ArgumentError("split.ratios must have three entries");
            cfg.split.ratios = SplitRatios{r[0], r[1], r[2]};
        }
    }
    if (doc.contains("rf")) cfg.rf = jsonutil::rf_config_from(doc.at("rf"));
    if (doc.contains("svm")) {
        const json& s = doc.at("svm");
        if (s.contains("kernel")) cfg.svm.kernel = jsonutil::kernel_params_from(s.at("kernel"));
        cfg.svm.max_passes = s.value("max_passes", cfg.svm.max_passes);
        cfg.svm.seed = s.value("seed", cfg.svm.seed);
        if (s.contains("strategy"))
            cfg.svm.strategy = strategy_from_name(s.at("strategy").get<std::string>());
    }
    if (doc.contains("cnn")) cfg.cnn = jsonutil::cnn_config_from(doc.at("cnn"));
    return cfg;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    json doc;
    doc["dataset_root"] = cfg.dataset_root;
    doc["resolution"] = cfg.resolution;
    doc["augment"] = cfg.augment;
    doc["model"] = model_kind_name(cfg.model);
    doc["watershed"] = watershed_config_json(cfg);
    doc["split"] = split_spec_json(cfg.split);
    doc["rf"] = jsonutil::to_json(cfg.rf);
    doc["svm"] = svm_config_json(cfg.svm);
    doc["cnn"] = jsonutil::to_json(cfg.cnn);
    return doc.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
    return fnv1a64_hex(canonical_config_json(cfg));
}

SplitRatios effective_ratios(const ExperimentConfig& cfg) {
    if (cfg.split.ratios) return *cfg.split.ratios;
    if (cfg.model == ModelKind::cnn) return SplitRatios{0.7, 0.1, 0.2};
    return SplitRatios{0.8, 0.0, 0.2};
}

FeaturePipeline feature_pipeline_of(const ExperimentConfig& cfg) {
    FeaturePipeline p;
    p.resolution = cfg.resolution;
    p.watershed = cfg.watershed;
    p.watershed_params = cfg.watershed_params;
    p.augment = cfg.augment;
    return p;
}

BuiltFeatures build_features(const Dataset& ds, const FeaturePipeline& pipeline, bool want_matrix,
                             bool want_tensors) {
    if (pipeline.resolution < 8) throw ArgumentError("working resolution must be at least 8x8");
    if (pipeline.augment && want_tensors)
        throw ArgumentError("augment mode is not supported for cnn (single-channel input)");
    if (pipeline.augment && !pipeline.watershed)
        throw ArgumentError("augment concatenates raw and watershed features; enable watershed");

    const int res = pipeline.resolution;
    const size_t n = ds.samples.size();
    const size_t dim = static_cast<size_t>(res) * res * (pipeline.augment ? 2 : 1);

    BuiltFeatures out;
    out.labels = ds.labels();
    if (want_matrix) out.X = FeatureMatrix(n, dim);
    if (want_tensors) out.tensors.assign(n, Tensor<float>());
    std::vector<uint8_t> degenerate(n, 0);

    parallel_for(n, [&](size_t i) {
        const Image resized = resize_area(ds.samples[i].image, res, res);
        Image feature = resized;
        if (pipeline.watershed) {
            FeatureImage f = watershed_features(resized, pipeline.watershed_params);
            feature = std::move(f.image);
            degenerate[i] = f.degenerate ? 1 : 0;
        }
        if (want_matrix) {
            auto row = out.X.row(i);
            size_t o = 0;
            if (pipeline.augment)
                for (uint8_t p : resized.pixels) row[o++] = p / 255.0;
            for (uint8_t p : feature.pixels) row[o++] = p / 255.0;
        }
        if (want_tensors) {
            Tensor<float> t(1, res, res);
            for (size_t j = 0; j < feature.pixels.size(); ++j)
                t.v[j] = static_cast<float>(feature.pixels[j]) / 255.0f;
            out.tensors[i] = std::move(t);
        }
    });
    for (uint8_t d : degenerate) out.degenerate_count += d;
    return out;
}

namespace {

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (size_t r : rows) out.push_back(labels[r]);
    return out;
}

FeatureMatrix gather_rows(const FeatureMatrix& X, const std::vector<size_t>& rows) {
    FeatureMatrix out(rows.size(), X.cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto src = X.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    RunReport report;
    report.config_hash = config_hash(cfg);
    report.output_dir = cfg.output_dir;
    PhaseTimer timer(report.timing_ms);

    if (cfg.augment && cfg.model == ModelKind::cnn)
        throw ArgumentError("[features] augment mode is not supported for cnn");

    const Dataset ds = timer.run("ingest", [&] { return load_dataset(cfg.dataset_root); });

    const FeaturePipeline pipeline = feature_pipeline_of(cfg);
    const bool want_tensors = cfg.model == ModelKind::cnn;
    const BuiltFeatures features = timer.run("features", [&] {
        return build_features(ds, pipeline, !want_tensors, want_tensors);
    });
    report.degenerate_count = features.degenerate_count;

    report.partition = timer.run("split", [&] {
        std::set<int> present(features.labels.begin(), features.labels.end());
        if (present.size() < 2)
            throw StratifyError("only " + std::to_string(present.size()) +
                                " class(es) present; training needs at least 2");
        return stratified_split(features.labels, static_cast<int>(ds.class_names.size()),
                                effective_ratios(cfg), cfg.split.seed, &ds.class_names);
    });
    const int k = static_cast<int>(ds.class_names.size());

    SavedModel saved;
    saved.pipeline = pipeline;
    std::vector<int> test_predictions;
    TrainingHistory history;

    timer.run("train", [&] {
        const auto& part = report.partition;
        if (cfg.model == ModelKind::rf) {
            const FeatureMatrix Xtrain = gather_rows(features.X, part.train);
            const std::vector<int> ytrain = gather_labels(features.labels, part.train);
            saved.model = fit_forest(Xtrain, ytrain, cfg.rf, k);
        } else if (cfg.model == ModelKind::svm) {
            const FeatureMatrix Xtrain = gather_rows(features.X, part.train);
            const std::vector<int> ytrain = gather_labels(features.labels, part.train);
            saved.model = fit_multiclass(Xtrain, ytrain, cfg.svm.kernel, cfg.svm.max_passes,
                                         cfg.svm.seed, cfg.svm.strategy);
        } else {
            CnnModel model;
            model.net.arch = standard_architecture();
            model.net.input_shape = {1, cfg.resolution, cfg.resolution};
            model.net.build();
            model.net.init_parameters(cfg.cnn.seed);
            model.config = cfg.cnn;
            std::vector<Tensor<float>> Xtrain, Xval;
            for (size_t r : part.train) Xtrain.push_back(features.tensors[r]);
            for (size_t r : part.validation) Xval.push_back(features.tensors[r]);
            const std::vector<int> ytrain = gather_labels(features.labels, part.train);
            const std::vector<int> yval = gather_labels(features.labels, part.validation);
            history = train_cnn(model, Xtrain, ytrain, Xval, yval);
            saved.model = std::move(model);
        }
    });

    timer.run("evaluate", [&] {
        const auto& part = report.partition;
        test_predictions.resize(part.test.size());
        if (const auto* rf = std::get_if<ForestModel>(&saved.model)) {
            parallel_for(part.test.size(), [&](size_t i) {
                test_predictions[i] = forest_predict(*rf, features.X.row(part.test[i])).predicted;
            });
        } else if (const auto* svm = std::get_if<SvmModel>(&saved.model)) {
            parallel_for(part.test.size(), [&](size_t i) {
                test_predictions[i] = svm_predict(*svm, features.X.row(part.test[i])).predicted;
            });
        } else {
            const auto& cnn = std::get<CnnModel>(saved.model);
            parallel_for(part.test.size(), [&](size_t i) {
                test_predictions[i] = cnn_predict(cnn, features.tensors[part.test[i]]).predicted;
            });
        }
        const std::vector<int> ytest = gather_labels(features.labels, part.test);
        report.confusion = confusion_matrix(ytest, test_predictions, k);
        report.card = score(report.confusion);
    });

    timer.run("persist", [&] {
        const std::filesystem::path out(cfg.output_dir);
        std::filesystem::create_directories(out);
        report.model_file = "model.json";
        report.scorecard_file = "scorecard.json";
        report.report_file = "report.json";
        save_model(saved, out / report.model_file);
        write_file_text(out / report.scorecard_file, scorecard_json(report.card).dump(2) + "\n");
        write_confusion_csv(report.confusion, out / "confusion.csv");
        write_confusion_pgm(report.confusion, out / "confusion.pgm");
        if (cfg.model == ModelKind::cnn) {
            json h;
            h["train_loss"] = history.train_loss;
            h["train_accuracy"] = history.train_accuracy;
            h["val_loss"] = history.val_loss;
            h["val_accuracy"] = history.val_accuracy;
            write_file_text(out / "history.json", h.dump(2) + "\n");
        }

        json doc;
        doc["config"] = json::parse(canonical_config_json(cfg));
        doc["config_hash"] = report.config_hash;
        doc["split_sizes"] = {{"train", report.partition.train.size()},
                              {"validation", report.partition.validation.size()},
                              {"test", report.partition.test.size()}};
        doc["degenerate_count"] = report.degenerate_count;
        doc["scorecard"] = scorecard_json(report.card);
        json paths = {{"model", report.model_file},
                      {"scorecard", report.scorecard_file},
                      {"confusion_csv", "confusion.csv"},
                      {"confusion_pgm", "confusion.pgm"}};
        if (cfg.model == ModelKind::cnn) paths["history"] = "history.json";
        doc["paths"] = std::move(paths);
        doc["timing_ms"] = report.timing_ms;
        write_file_text(out / report.report_file, doc.dump(2) + "\n");
    });
    return report;
}

std::vector<ComparisonRow> compare_all(const ExperimentConfig& base) {
    struct Entry {
        const char* name;
        const char* slug;
        ModelKind kind;
        bool watershed;
    };
    static const Entry entries[6] = {
        {"RF", "rf", ModelKind::rf, false},        {"WS+RF", "ws_rf", ModelKind::rf, true},
        {"SVM", "svm", ModelKind::svm, false},     {"WS+SVM", "ws_svm", ModelKind::svm, true},
        {"CNN", "cnn", ModelKind::cnn, false},     {"WS+CNN", "ws_cnn", ModelKind::cnn, true},
    };

    const std::filesystem::path out(base.output_dir);
    std::filesystem::create_directories(out);
    std::vector<ComparisonRow> rows;
    SplitPartition previous_partition;
    for (const Entry& entry : entries) {
        ExperimentConfig cfg = base;
        cfg.model = entry.kind;
        cfg.watershed = entry.watershed;
        cfg.output_dir = (out / entry.slug).string();
        const RunReport report = run_experiment(cfg);

        // The watershed toggle must not move the split.
        if (entry.watershed &&
            (report.partition.train != previous_partition.train ||
             report.partition.validation != previous_partition.validation ||
             report.partition.test != previous_partition.test))
            throw Error(std::string("split mismatch between raw and watershed runs of ") +
                        model_kind_name(entry.kind));
        previous_partition = report.partition;

        rows.push_back({entry.name, report.card});
        write_file_text(out / "comparison.csv", comparison_csv(rows));
        write_file_text(out / "comparison.txt", comparison_text(rows));
    }
    return rows;
}

std::vector<ComparisonRow> reference_results() {
    // Accuracy / precision / recall / F1 percentages for the 6400-image
    // archive; the comparison table rows these reproduce.
    struct Ref {
        const char* name;
        double acc, prec, rec, f1;
    };
    static const Ref refs[6] = {
        {"RF", 91.25, 92.0, 91.0, 91.0},    {"WS+RF", 89.53, 90.0, 90.0, 89.0},
        {"SVM", 80.70, 81.0, 81.0, 80.0},   {"WS+SVM", 96.25, 98.0, 97.0, 97.0},
        {"CNN", 93.98, 94.0, 94.0, 94.0},   {"WS+CNN", 95.16, 95.0, 95.0, 95.0},
    };
    std::vector<ComparisonRow> rows;
    for (const Ref& r : refs) {
        ScoreCard card;
        card.accuracy = r.acc / 100.0;
        card.macro_precision = card.weighted_precision = r.prec / 100.0;
        card.macro_recall = card.weighted_recall = r.rec / 100.0;
        card.macro_f1 = card.weighted_f1 = r.f1 / 100.0;
        rows.push_back({r.name, card});
    }
    return rows;
}

EvaluateResult evaluate_model(const SavedModel& saved, const Dataset& ds) {
    const bool want_tensors = std::holds_alternative<CnnModel>(saved.model);
    const BuiltFeatures features = build_features(ds, saved.pipeline, !want_tensors, want_tensors);

    EvaluateResult result;
    result.degenerate_count = features.degenerate_count;
    result.predictions.resize(ds.samples.size());
    if (const auto* rf = std::get_if<ForestModel>(&saved.model)) {
        parallel_for(ds.samples.size(), [&](size_t i) {
            result.predictions[i] = forest_predict(*rf, features.X.row(i)).predicted;
        });
    } else if (const auto* svm = std::get_if<SvmModel>(&saved.model)) {
        parallel_for(ds.samples.size(), [&](size_t i) {
            result.predictions[i] = svm_predict(*svm, features.X.row(i)).predicted;
        });
    } else {
        const auto& cnn = std::get<CnnModel>(saved.model);
        parallel_for(ds.samples.size(), [&](size_t i) {
            result.predictions[i] = cnn_predict(cnn, features.tensors[i]).predicted;
        });
    }
    result.cm = confusion_matrix(features.labels, result.predictions,
                                 static_cast<int>(ds.class_names.size()));
    result.card = score(result.cm);
    return result;
}

namespace {

Image scale_to_image(const DistanceMap& map) {
    Image img(map.width, map.height);
    const double max = map.max_value();
    if (max > 0.0)
        for (size_t i = 0; i < map.values.size(); ++i)
            img.pixels[i] = static_cast<uint8_t>(std::lround(255.0 * map.values[i] / max));
    return img;
}

Image mask_to_image(const BinaryMask& mask) {
    Image img(mask.width, mask.height);
    for (size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 255 : 0;
    return img;
}

Image markers_to_image(const MarkerMap& markers) {
    Image img(markers.width, markers.height);
    int32_t max_label = 1;
    for (int32_t l : markers.labels) max_label = std::max(max_label, l);
    for (size_t i = 0; i < markers.labels.size(); ++i)
        img.pixels[i] = static_cast<uint8_t>(
            std::lround(255.0 * static_cast<double>(markers.labels[i]) / max_label));
    return img;
}

std::string stem_of(const std::string& relative_path) {
    const std::filesystem::path p(relative_path);
    return p.stem().string();
}

}  // namespace

Manifest segment_dataset(const Manifest& input, const std::filesystem::path& out_dir,
                         const SegmentOptions& options) {
    const Dataset ds = load_from_manifest(input);
    std::filesystem::create_directories(out_dir);

    Manifest result;
    result.root = std::filesystem::absolute(out_dir).lexically_normal().string();
    result.class_names = ds.class_names;
    result.features = "watershed";
    result.entries.resize(ds.samples.size());

    for (const auto& name : ds.class_names) {
        std::filesystem::create_directories(out_dir / name);
        if (!options.dump_steps_dir.empty())
            std::filesystem::create_directories(std::filesystem::path(options.dump_steps_dir) /
                                                name);
    }

    parallel_for(ds.samples.size(), [&](size_t i) {
        const Sample& sample = ds.samples[i];
        const Image working = resize_area(sample.image, options.resolution, options.resolution);
        const SegmentationResult seg = run_watershed(working, options.params);

        const std::string class_name = ds.class_names[static_cast<size_t>(sample.class_label)];
        const std::string rel = class_name + "/" + stem_of(sample.relative_path) + ".pgm";
        write_pgm(seg.features, out_dir / rel);

        if (!options.dump_steps_dir.empty()) {
            const std::filesystem::path dump =
                std::filesystem::path(options.dump_steps_dir) / class_name;
            const std::string stem = stem_of(sample.relative_path);
            write_pgm(mask_to_image(seg.threshold_mask), dump / (stem + "_1_threshold.pgm"));
            write_pgm(mask_to_image(seg.opened), dump / (stem + "_2_opened.pgm"));
            write_pgm(mask_to_image(seg.possible_fg), dump / (stem + "_3_possible_fg.pgm"));
            write_pgm(scale_to_image(seg.distance), dump / (stem + "_4_distance.pgm"));
            write_pgm(mask_to_image(seg.sure_fg), dump / (stem + "_5_sure_fg.pgm"));
            write_pgm(markers_to_image(seg.markers.markers), dump / (stem + "_6_markers.pgm"));
            write_pgm(seg.features, dump / (stem + "_7_features.pgm"));
        }

        ManifestEntry e;
        e.path = rel;
        e.class_label = sample.class_label;
        e.width = seg.features.width;
        e.height = seg.features.height;
        const auto bytes = read_file_bytes(out_dir / rel);
        e.content_hash = fnv1a64_hex(bytes.data(), bytes.size());
        e.degenerate = seg.degenerate;
        result.entries[i] = std::move(e);
    });
    for (const auto& e : result.entries)
        if (e.degenerate) result.degenerate_count++;

    write_manifest(result, out_dir / "manifest.json");
    return result;
}

}  // namespace demgrade
