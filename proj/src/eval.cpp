#include "demgrade/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "demgrade/binio.hpp"
#include "demgrade/errors.hpp"
#include "demgrade/image.hpp"

namespace demgrade {

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

int64_t ConfusionMatrix::trace() const {
    int64_t t = 0;
    for (int c = 0; c < k; ++c) t += at(c, c);
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k) {
    if (y_true.size() != y_pred.size())
        throw ArgumentError("confusion_matrix: label vectors differ in length");
    ConfusionMatrix cm(k);
    for (size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= k || p < 0 || p >= k)
            throw ArgumentError("confusion_matrix: label out of range at index " +
                                std::to_string(i));
        cm.at(t, p)++;
    }
    return cm;
}

ScoreCard score(const ConfusionMatrix& cm) {
    const int64_t total = cm.total();
    if (cm.k <= 0 || total <= 0) throw ArgumentError("score: empty confusion matrix");

    ScoreCard card;
    card.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    card.precision.resize(static_cast<size_t>(cm.k), 0.0);
    card.recall.resize(static_cast<size_t>(cm.k), 0.0);
    card.f1.resize(static_cast<size_t>(cm.k), 0.0);
    card.support.resize(static_cast<size_t>(cm.k), 0);
    card.precision_undefined.resize(static_cast<size_t>(cm.k), false);
    card.recall_undefined.resize(static_cast<size_t>(cm.k), false);

    for (int c = 0; c < cm.k; ++c) {
        const int64_t tp = cm.at(c, c);
        int64_t fp = 0, fn = 0;
        for (int o = 0; o < cm.k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const size_t ci = static_cast<size_t>(c);
        card.support[ci] = tp + fn;
        if (tp + fp > 0)
            card.precision[ci] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        else
            card.precision_undefined[ci] = true;
        if (tp + fn > 0)
            card.recall[ci] = static_cast<double>(tp) / static_cast<double>(tp + fn);
        else
            card.recall_undefined[ci] = true;
        const double p = card.precision[ci];
        const double r = card.recall[ci];
        card.f1[ci] = (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    }

    for (int c = 0; c < cm.k; ++c) {
        const size_t ci = static_cast<size_t>(c);
        const double w = static_cast<double>(card.support[ci]) / static_cast<double>(total);
        card.macro_precision += card.precision[ci] / cm.k;
        card.macro_recall += card.recall[ci] / cm.k;
        card.macro_f1 += card.f1[ci] / cm.k;
        card.weighted_precision += w * card.precision[ci];
        card.weighted_recall += w * card.recall[ci];
        card.weighted_f1 += w * card.f1[ci];
    }
    return card;
}

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

struct TableCell {
    double value;
    bool best;
};

std::vector<std::vector<TableCell>> table_cells(const std::vector<ComparisonRow>& rows,
                                                AverageKind average) {
    std::vector<std::vector<TableCell>> cells(rows.size(), std::vector<TableCell>(4));
    for (size_t r = 0; r < rows.size(); ++r) {
        const ScoreCard& c = rows[r].card;
        const bool macro = average == AverageKind::macro;
        cells[r][0] = {c.accuracy, false};
        cells[r][1] = {macro ? c.macro_precision : c.weighted_precision, false};
        cells[r][2] = {macro ? c.macro_recall : c.weighted_recall, false};
        cells[r][3] = {macro ? c.macro_f1 : c.weighted_f1, false};
    }
    for (int col = 0; col < 4; ++col) {
        double best = -1.0;
        for (const auto& row : cells) best = std::max(best, row[static_cast<size_t>(col)].value);
        for (auto& row : cells)
            if (row[static_cast<size_t>(col)].value == best) row[static_cast<size_t>(col)].best = true;
    }
    return cells;
}

}  // namespace

std::string comparison_text(const std::vector<ComparisonRow>& rows, AverageKind average) {
    if (rows.empty()) throw ArgumentError("comparison_text: no runs");
    const auto cells = table_cells(rows, average);
    static const char* headers[4] = {"Accuracy %", "Precision %", "Recall %", "F1-Score %"};

    size_t name_width = 5;
    for (const auto& row : rows) name_width = std::max(name_width, row.name.size());

    std::ostringstream out;
    out << "Model";
    out << std::string(name_width - 5, ' ');
    for (const char* h : headers) out << "  " << h;
    out << "\n";
    for (size_t r = 0; r < rows.size(); ++r) {
        out << rows[r].name << std::string(name_width - rows[r].name.size(), ' ');
        for (int col = 0; col < 4; ++col) {
            const TableCell& cell = cells[r][static_cast<size_t>(col)];
            std::string v = percent(cell.value);
            if (cell.best) v += "*";
            const size_t w = std::string(headers[col]).size();
            out << "  " << std::string(w > v.size() ? w - v.size() : 0, ' ') << v;
        }
        out << "\n";
    }
    return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << "model,accuracy,precision_macro,recall_macro,f1_macro,"
           "precision_weighted,recall_weighted,f1_weighted\n";
    for (const auto& row : rows) {
        const ScoreCard& c = row.card;
        out << row.name << "," << percent(c.accuracy) << "," << percent(c.macro_precision) << ","
            << percent(c.macro_recall) << "," << percent(c.macro_f1) << ","
            << percent(c.weighted_precision) << "," << percent(c.weighted_recall) << ","
            << percent(c.weighted_f1) << "\n";
    }
    return out.str();
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
    std::ostringstream out;
    for (int t = 0; t < cm.k; ++t) {
        for (int p = 0; p < cm.k; ++p) {
            if (p) out << ",";
            out << cm.at(t, p);
        }
        out << "\n";
    }
    write_file_text(path, out.str());
}

void write_confusion_pgm(const ConfusionMatrix& cm, const std::filesystem::path& path) {
    int64_t max_count = 0;
    for (int64_t v : cm.counts) max_count = std::max(max_count, v);
    Image img(std::max(cm.k, 1), std::max(cm.k, 1));
    for (int t = 0; t < cm.k; ++t)
        for (int p = 0; p < cm.k; ++p)
            img.at(p, t) = max_count > 0
                               ? static_cast<uint8_t>(std::lround(
                                     255.0 * static_cast<double>(cm.at(t, p)) /
                                     static_cast<double>(max_count)))
                               : 0;
    write_pgm(img, path);
}

}  // namespace demgrade
