#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "demgrade/binio.hpp"
#include "demgrade/pipeline.hpp"

namespace {

using namespace demgrade;

struct TrainFlags {
    std::string config_path;
    std::string model = "rf";
    std::string dataset_root;
    std::string output_dir;
    bool watershed = false;
    bool augment = false;
    int64_t split_seed = -1;
};

ExperimentConfig resolve_config(const TrainFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = config_from_json_file(flags.config_path);
    cfg.model = model_kind_from_name(flags.model);
    if (flags.watershed) cfg.watershed = true;
    if (flags.augment) cfg.augment = true;
    if (!flags.dataset_root.empty()) cfg.dataset_root = flags.dataset_root;
    if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
    if (flags.split_seed >= 0) cfg.split.seed = static_cast<uint64_t>(flags.split_seed);
    if (cfg.dataset_root.empty())
        throw ArgumentError("no dataset root (use --dataset or set dataset_root in the config)");
    return cfg;
}

void print_scorecard(const ScoreCard& card) {
    std::printf("accuracy        %.2f%%\n", card.accuracy * 100.0);
    std::printf("macro    P/R/F1 %.2f%% / %.2f%% / %.2f%%\n", card.macro_precision * 100.0,
                card.macro_recall * 100.0, card.macro_f1 * 100.0);
    std::printf("weighted P/R/F1 %.2f%% / %.2f%% / %.2f%%\n", card.weighted_precision * 100.0,
                card.weighted_recall * 100.0, card.weighted_f1 * 100.0);
}

void print_reference_check(const std::vector<ComparisonRow>& rows) {
    const auto refs = reference_results();
    std::printf("\nreference check (accuracy, ours vs reference, delta):\n");
    double best_acc = -1.0;
    std::string best_name;
    for (const auto& row : rows) {
        if (row.card.accuracy > best_acc) {
            best_acc = row.card.accuracy;
            best_name = row.name;
        }
    }
    for (const auto& row : rows) {
        for (const auto& ref : refs) {
            if (ref.name != row.name) continue;
            const double ours = row.card.accuracy * 100.0;
            const double expected = ref.card.accuracy * 100.0;
            const double delta = ours - expected;
            std::printf("  %-7s %6.2f vs %6.2f  (%+.2f%s)\n", row.name.c_str(), ours, expected,
                        delta, std::abs(delta) <= 3.0 ? "" : ", outside +-3");
        }
    }
    std::printf("  top model by accuracy: %s (reference: WS+SVM)%s\n", best_name.c_str(),
                best_name == "WS+SVM" ? "" : " -- ordering differs");
}

int run(int argc, char** argv) {
    CLI::App app{"dementia-level MRI classification pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "scan a dataset directory into a manifest");
    std::string ingest_root, ingest_out = "manifest.json";
    ingest->add_option("root", ingest_root, "dataset root (one subdirectory per class)")
        ->required();
    ingest->add_option("-o,--output", ingest_out, "manifest path");

    // segment
    auto* segment = app.add_subcommand("segment", "write watershed feature images as PGM");
    std::string segment_manifest, segment_out = "segmented", segment_dump;
    SegmentOptions segment_options;
    segment->add_option("--manifest", segment_manifest, "input manifest")->required();
    segment->add_option("-o,--output", segment_out, "output directory");
    segment->add_option("--dump-steps", segment_dump, "directory for per-step PGM dumps");
    segment->add_option("--resolution", segment_options.resolution, "working resolution");
    segment->add_option("--fg-ratio", segment_options.params.fg_ratio,
                        "sure-foreground distance ratio");
    segment->add_option("--open-iterations", segment_options.params.open_iterations,
                        "opening iterations");
    segment->add_option("--dilate-iterations", segment_options.params.dilate_iterations,
                        "dilation iterations");

    // train
    auto* train = app.add_subcommand("train", "train one model and score it on the test split");
    TrainFlags train_flags;
    train->add_option("--model", train_flags.model, "rf | svm | cnn")->required();
    train->add_option("--config", train_flags.config_path, "experiment config JSON");
    train->add_option("--dataset", train_flags.dataset_root, "dataset root");
    train->add_option("-o,--output", train_flags.output_dir, "output directory");
    train->add_option("--seed", train_flags.split_seed, "split seed override");
    train->add_flag("--watershed", train_flags.watershed, "extract watershed features");
    train->add_flag("--augment", train_flags.augment, "concatenate raw and watershed features");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a saved model against a manifest");
    std::string eval_model, eval_manifest, eval_out = "eval_out";
    evaluate->add_option("--model-path", eval_model, "model JSON path")->required();
    evaluate->add_option("--manifest", eval_manifest, "manifest of labeled images")->required();
    evaluate->add_option("-o,--output", eval_out, "output directory");

    // compare
    auto* compare = app.add_subcommand("compare", "run all six model/watershed configurations");
    TrainFlags compare_flags;
    bool check_reference = false;
    compare->add_option("--config", compare_flags.config_path, "experiment config JSON");
    compare->add_option("--dataset", compare_flags.dataset_root, "dataset root");
    compare->add_option("-o,--output", compare_flags.output_dir, "output directory");
    compare->add_option("--seed", compare_flags.split_seed, "split seed override");
    compare->add_flag("--check-reference", check_reference,
                      "report deltas against the stored reference results");
    std::string average = "macro";
    compare->add_option("--average", average, "headline average: macro | weighted");

    // synthesize-dataset
    auto* synth = app.add_subcommand("synthesize-dataset",
                                     "generate the four-class geometric mini-dataset");
    std::string synth_out;
    int synth_per_class = 20, synth_size = 128;
    int64_t synth_seed = 0;
    synth->add_option("-o,--output", synth_out, "output root directory")->required();
    synth->add_option("--per-class", synth_per_class, "images per class");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--size", synth_size, "image side length");

    CLI11_PARSE(app, argc, argv);

    if (*ingest) {
        const Manifest manifest = build_manifest(ingest_root);
        write_manifest(manifest, ingest_out);
        size_t nonstandard = 0;
        for (const auto& e : manifest.entries)
            if (e.width != kExpectedSide || e.height != kExpectedSide) nonstandard++;
        std::printf("ingested %zu samples into %s\n", manifest.entries.size(), ingest_out.c_str());
        if (nonstandard > 0)
            std::printf("warning: %zu samples are not %dx%d and will be resized\n", nonstandard,
                        kExpectedSide, kExpectedSide);
        return 0;
    }
    if (*segment) {
        segment_options.dump_steps_dir = segment_dump;
        const Manifest input = read_manifest(segment_manifest);
        const Manifest result = segment_dataset(input, segment_out, segment_options);
        std::printf("segmented %zu samples into %s (%zu degenerate)\n", result.entries.size(),
                    segment_out.c_str(), result.degenerate_count);
        return 0;
    }
    if (*train) {
        const ExperimentConfig cfg = resolve_config(train_flags);
        const RunReport report = run_experiment(cfg);
        std::printf("run %s complete; outputs in %s\n", report.config_hash.c_str(),
                    report.output_dir.string().c_str());
        if (report.degenerate_count > 0)
            std::printf("note: %zu degenerate segmentations fell back to raw images\n",
                        report.degenerate_count);
        print_scorecard(report.card);
        return 0;
    }
    if (*evaluate) {
        const SavedModel model = load_model(eval_model);
        const Manifest manifest = read_manifest(eval_manifest);
        const Dataset ds = load_from_manifest(manifest);
        const EvaluateResult result = evaluate_model(model, ds);
        std::filesystem::create_directories(eval_out);
        write_confusion_csv(result.cm, std::filesystem::path(eval_out) / "confusion.csv");
        write_confusion_pgm(result.cm, std::filesystem::path(eval_out) / "confusion.pgm");
        write_file_text(std::filesystem::path(eval_out) / "scorecard.csv",
                        comparison_csv({{model_kind_name(model.model), result.card}}));
        if (result.degenerate_count > 0)
            std::printf("note: %zu degenerate segmentations fell back to raw images\n",
                        result.degenerate_count);
        print_scorecard(result.card);
        return 0;
    }
    if (*compare) {
        compare_flags.model = "rf";  // placeholder; compare_all sets each kind
        ExperimentConfig cfg;
        if (!compare_flags.config_path.empty())
            cfg = config_from_json_file(compare_flags.config_path);
        if (!compare_flags.dataset_root.empty()) cfg.dataset_root = compare_flags.dataset_root;
        if (!compare_flags.output_dir.empty()) cfg.output_dir = compare_flags.output_dir;
        if (compare_flags.split_seed >= 0)
            cfg.split.seed = static_cast<uint64_t>(compare_flags.split_seed);
        if (cfg.dataset_root.empty())
            throw ArgumentError(
                "no dataset root (use --dataset or set dataset_root in the config)");
        if (average != "macro" && average != "weighted")
            throw ArgumentError("--average must be macro or weighted");
        const auto rows = compare_all(cfg);
        std::printf("%s", comparison_text(rows, average == "macro" ? AverageKind::macro
                                                                   : AverageKind::weighted)
                              .c_str());
        if (check_reference) print_reference_check(rows);
        return 0;
    }
    if (*synth) {
        synthesize_dataset(synth_out, synth_per_class, static_cast<uint64_t>(synth_seed),
                           synth_size);
        std::printf("wrote %d images per class under %s\n", synth_per_class, synth_out.c_str());
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const demgrade::PhaseError& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.phase.c_str(), e.what());
        return 1;
    } catch (const demgrade::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
