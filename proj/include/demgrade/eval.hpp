#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace demgrade {

// rows = true class, cols = predicted class.
struct ConfusionMatrix {
    int k = 0;
    std::vector<int64_t> counts;

    explicit ConfusionMatrix(int classes = 0)
        : k(classes), counts(static_cast<size_t>(classes) * classes, 0) {}

    int64_t at(int true_class, int predicted) const {
        return counts[static_cast<size_t>(true_class) * k + predicted];
    }
    int64_t& at(int true_class, int predicted) {
        return counts[static_cast<size_t>(true_class) * k + predicted];
    }
    int64_t total() const;
    int64_t trace() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k);

// Per-class and aggregate scores. Zero-denominator scores are defined as 0
// and flagged rather than erroring.
struct ScoreCard {
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    std::vector<int64_t> support;
    std::vector<bool> precision_undefined, recall_undefined;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

ScoreCard score(const ConfusionMatrix& cm);

enum class AverageKind { macro, weighted };

struct ComparisonRow {
    std::string name;
    ScoreCard card;
};

// Aligned text table, percentages at two decimals; the best value in each
// column is marked with '*' (ties all marked).
std::string comparison_text(const std::vector<ComparisonRow>& rows,
                            AverageKind average = AverageKind::macro);

// CSV with both macro and weighted aggregates, one row per run.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);
// Heatmap: counts scaled linearly to 0-255, one pixel per cell.
void write_confusion_pgm(const ConfusionMatrix& cm, const std::filesystem::path& path);

}  // namespace demgrade
