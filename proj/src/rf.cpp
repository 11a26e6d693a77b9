#include "demgrade/rf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "demgrade/parallel.hpp"
#include "demgrade/rng.hpp"

namespace demgrade {

double gini_impurity(std::span<const int> labels) {
    if (labels.empty()) throw ArgumentError("gini_impurity of an empty label set");
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    std::vector<int64_t> counts(static_cast<size_t>(max_label) + 1, 0);
    for (int l : labels) counts[static_cast<size_t>(l)]++;
    const double n = static_cast<double>(labels.size());
    double sum_sq = 0.0;
    for (int64_t c : counts) {
        const double p = static_cast<double>(c) / n;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

namespace {

// Split quality is compared via S = sum_child (sum_c count_c^2) / n_child,
// a monotone transform of weighted Gini (larger S = purer children). Exact
// integer cross-multiplication keeps tie-breaking deterministic.
struct SplitScore {
    int64_t left_sq = 0;   // sum of squared class counts, left child
    int64_t right_sq = 0;
    int64_t left_n = 0;
    int64_t right_n = 0;

    bool better_than(const SplitScore& other) const {
        // S = left_sq/left_n + right_sq/right_n, compared exactly.
        const __int128 a = static_cast<__int128>(left_sq) * right_n +
                           static_cast<__int128>(right_sq) * left_n;
        const __int128 b = static_cast<__int128>(left_n) * right_n;
        const __int128 c = static_cast<__int128>(other.left_sq) * other.right_n +
                           static_cast<__int128>(other.right_sq) * other.left_n;
        const __int128 d = static_cast<__int128>(other.left_n) * other.right_n;
        return a * d > c * b;
    }

    // True when this split is strictly purer than the unsplit parent.
    bool improves_on(int64_t parent_sq, int64_t parent_n) const {
        const __int128 a = static_cast<__int128>(left_sq) * right_n +
                           static_cast<__int128>(right_sq) * left_n;
        const __int128 b = static_cast<__int128>(left_n) * right_n;
        return a * parent_n > static_cast<__int128>(parent_sq) * b;
    }
};

}  // namespace

std::optional<Split> best_split(const FeatureMatrix& X, std::span<const int> y,
                                std::span<const size_t> sample_rows,
                                std::span<const int> candidate_features, int n_classes) {
    const size_t n = sample_rows.size();
    if (n < 2) return std::nullopt;

    std::vector<int64_t> total_counts(static_cast<size_t>(n_classes), 0);
    for (size_t row : sample_rows) total_counts[static_cast<size_t>(y[row])]++;
    int64_t parent_sq = 0;
    for (int64_t c : total_counts) parent_sq += c * c;
    if (parent_sq == static_cast<int64_t>(n) * static_cast<int64_t>(n))
        return std::nullopt;  // pure node

    std::vector<int> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());

    std::optional<Split> best;
    SplitScore best_score;
    std::vector<size_t> order(sample_rows.begin(), sample_rows.end());
    std::vector<int64_t> left_counts(static_cast<size_t>(n_classes));

    for (int feature : features) {
        const size_t f = static_cast<size_t>(feature);
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return X.at(a, f) < X.at(b, f); });

        std::fill(left_counts.begin(), left_counts.end(), 0);
        int64_t left_sq = 0;
        int64_t right_sq = parent_sq;
        for (size_t i = 0; i + 1 < n; ++i) {
            const int label = y[order[i]];
            auto& c = left_counts[static_cast<size_t>(label)];
            left_sq += 2 * c + 1;
            right_sq -= 2 * (total_counts[static_cast<size_t>(label)] - c) - 1;
            c++;

            const double value = X.at(order[i], f);
            const double next_value = X.at(order[i + 1], f);
            if (value == next_value) continue;  // threshold only between distinct values

            SplitScore score{left_sq, right_sq, static_cast<int64_t>(i) + 1,
                             static_cast<int64_t>(n - i - 1)};
            if (score.improves_on(parent_sq, static_cast<int64_t>(n)) &&
                (!best || score.better_than(best_score))) {
                best_score = score;
                best = Split{feature, value + (next_value - value) / 2.0};
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const FeatureMatrix& X;
    std::span<const int> y;
    int n_classes;
    int max_depth;
    int features_per_split;
    SplitMix64 rng;
    Tree tree;
    std::vector<int> feature_pool;

    TreeBuilder(const FeatureMatrix& x, std::span<const int> labels, int classes, int depth,
                int per_split, uint64_t seed)
        : X(x), y(labels), n_classes(classes), max_depth(depth), features_per_split(per_split),
          rng(seed) {
        feature_pool.resize(X.cols);
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
    }

    std::vector<uint32_t> histogram_of(std::span<const size_t> rows) const {
        std::vector<uint32_t> hist(static_cast<size_t>(n_classes), 0);
        for (size_t row : rows) hist[static_cast<size_t>(y[row])]++;
        return hist;
    }

    // Draws features_per_split distinct candidates by partial Fisher-Yates
    // over a persistent pool; the pool's evolving order is part of the
    // deterministic per-tree stream.
    std::vector<int> draw_candidates() {
        const size_t k = std::min<size_t>(static_cast<size_t>(features_per_split),
                                          feature_pool.size());
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + static_cast<size_t>(rng.next_below(feature_pool.size() - i));
            std::swap(feature_pool[i], feature_pool[j]);
        }
        return {feature_pool.begin(), feature_pool.begin() + static_cast<long>(k)};
    }

    int build(std::vector<size_t> rows, int depth) {
        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        auto make_leaf = [&] {
            tree.nodes[static_cast<size_t>(node_index)].histogram = histogram_of(rows);
            return node_index;
        };
        if (depth >= max_depth || rows.size() < 2) return make_leaf();

        const std::vector<int> candidates = draw_candidates();
        const auto split = best_split(X, y, rows, candidates, n_classes);
        if (!split) return make_leaf();

        std::vector<size_t> left_rows, right_rows;
        for (size_t row : rows) {
            if (X.at(row, static_cast<size_t>(split->feature)) <= split->threshold)
                left_rows.push_back(row);
            else
                right_rows.push_back(row);
        }
        if (left_rows.empty() || right_rows.empty()) return make_leaf();

        rows.clear();
        rows.shrink_to_fit();
        const int left = build(std::move(left_rows), depth + 1);
        const int right = build(std::move(right_rows), depth + 1);
        TreeNode& node = tree.nodes[static_cast<size_t>(node_index)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = left;
        node.right = right;
        return node_index;
    }
};

}  // namespace

ForestModel fit_forest(const FeatureMatrix& X, std::span<const int> y, const RfConfig& config,
                       int n_classes) {
    if (X.rows != y.size()) throw ArgumentError("fit_forest: X and y row counts differ");
    if (X.rows == 0) throw ArgumentError("fit_forest: empty training set");
    if (config.n_trees < 1) throw ArgumentError("fit_forest: n_trees must be positive");

    int classes = n_classes;
    if (classes <= 0) {
        for (int l : y) classes = std::max(classes, l + 1);
    }

    ForestModel model;
    model.n_features = static_cast<int>(X.cols);
    model.n_classes = classes;
    model.config = config;
    if (model.config.features_per_split <= 0)
        model.config.features_per_split =
            std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols)))));

    model.trees.resize(static_cast<size_t>(config.n_trees));
    const int per_split = model.config.features_per_split;
    parallel_for(static_cast<size_t>(config.n_trees), [&](size_t t) {
        SplitMix64 rng(derive_seed(config.seed, t));
        std::vector<size_t> bootstrap(X.rows);
        for (size_t i = 0; i < X.rows; ++i)
            bootstrap[i] = static_cast<size_t>(rng.next_below(X.rows));

        TreeBuilder builder(X, y, classes, config.max_depth, per_split, rng.next());
        builder.build(std::move(bootstrap), 0);
        model.trees[t] = std::move(builder.tree);
    });
    return model;
}

int tree_predict(const Tree& tree, std::span<const double> x) {
    size_t node = 0;
    while (!tree.nodes[node].is_leaf()) {
        const TreeNode& n = tree.nodes[node];
        node = static_cast<size_t>(x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left
                                                                                    : n.right);
    }
    const auto& hist = tree.nodes[node].histogram;
    int best = 0;
    for (size_t c = 1; c < hist.size(); ++c)
        if (hist[c] > hist[static_cast<size_t>(best)]) best = static_cast<int>(c);
    return best;
}

int tree_depth(const Tree& tree) {
    // Iterative depth over the node arena.
    std::vector<std::pair<size_t, int>> stack{{0, 0}};
    int depth = 0;
    while (!stack.empty()) {
        const auto [node, d] = stack.back();
        stack.pop_back();
        depth = std::max(depth, d);
        const TreeNode& n = tree.nodes[node];
        if (!n.is_leaf()) {
            stack.push_back({static_cast<size_t>(n.left), d + 1});
            stack.push_back({static_cast<size_t>(n.right), d + 1});
        }
    }
    return depth;
}

ForestVote forest_predict(const ForestModel& model, std::span<const double> x) {
    if (x.size() != static_cast<size_t>(model.n_features))
        throw ArgumentError("forest_predict: feature vector has wrong length");
    ForestVote result;
    result.votes.assign(static_cast<size_t>(model.n_classes), 0);
    for (const Tree& tree : model.trees) result.votes[static_cast<size_t>(tree_predict(tree, x))]++;
    for (size_t c = 1; c < result.votes.size(); ++c)
        if (result.votes[c] > result.votes[static_cast<size_t>(result.predicted)])
            result.predicted = static_cast<int>(c);
    return result;
}

}  // namespace demgrade
