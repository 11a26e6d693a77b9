#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "demgrade/features.hpp"

namespace demgrade {

struct RfConfig {
    int n_trees = 100;
    int max_depth = 16;
    int features_per_split = 0;  // 0 = floor(sqrt(n_features))
    uint64_t seed = 0;

    bool operator==(const RfConfig&) const = default;
};

// Leaf nodes carry the class histogram of the training samples that reached
// them; internal nodes test feature <= threshold (left branch).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<uint32_t> histogram;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
    std::vector<Tree> trees;
    int n_features = 0;
    int n_classes = 0;
    RfConfig config;
};

// CART criterion: 1 - sum_c p_c^2.
double gini_impurity(std::span<const int> labels);

struct Split {
    int feature = 0;
    double threshold = 0.0;
};

// Best (feature, threshold) over midpoints between consecutive distinct
// sorted values, minimizing weighted child Gini with exact integer
// comparisons; ties break to (lower feature, lower threshold). Returns
// nullopt when no split reduces impurity.
std::optional<Split> best_split(const FeatureMatrix& X, std::span<const int> y,
                                std::span<const size_t> sample_rows,
                                std::span<const int> candidate_features, int n_classes);

// Bagged Gini trees; each tree bootstraps n rows and draws candidate
// features per node from a PRNG seeded by (config.seed, tree index), so
// training parallelizes across trees without changing the result.
ForestModel fit_forest(const FeatureMatrix& X, std::span<const int> y, const RfConfig& config,
                       int n_classes = 0);

struct ForestVote {
    int predicted = 0;
    std::vector<int> votes;  // trees voting for each class
};

ForestVote forest_predict(const ForestModel& model, std::span<const double> x);

int tree_predict(const Tree& tree, std::span<const double> x);
int tree_depth(const Tree& tree);

}  // namespace demgrade
