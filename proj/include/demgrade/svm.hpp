#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "demgrade/features.hpp"

namespace demgrade {

struct KernelParams {
    int degree = 3;
    double gamma = 0.0;  // <= 0 requests the auto value 1 / (n_features * var(X))
    double coef0 = 0.0;
    double C = 1.0;
    double tol = 1e-3;

    bool operator==(const KernelParams&) const = default;
};

// (gamma * <x, z> + coef0) ^ degree
double poly_kernel(std::span<const double> x, std::span<const double> z, const KernelParams& p);

// One soft-margin machine trained on +-1 labels.
struct BinarySvm {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i, nonzero entries only
    double bias = 0.0;
    KernelParams params;
    bool converged = true;

    double decision(std::span<const double> x) const;
    // Dual objective of the stored solution: sum alpha - 1/2 sum_ij
    // alpha_i alpha_j y_i y_j K_ij.
    double dual_objective() const;
};

// Platt-style SMO with an error cache. Pair selection is deterministic for a
// given seed: the second-choice heuristic maximizes |E1 - E2| with ties to
// the lowest index, and the fallback scans start at seeded offsets.
// max_passes bounds the outer loop; if the KKT conditions are not met within
// tol by then, the best iterate is returned with converged = false.
BinarySvm smo_fit_binary(const FeatureMatrix& X, std::span<const int> y, KernelParams params,
                         int max_passes = 200, uint64_t seed = 0);

struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/std, or 1 where std is ~0

    std::vector<double> apply(std::span<const double> x) const;
};

Scaler fit_scaler(const FeatureMatrix& X);

enum class MulticlassStrategy { one_vs_one, one_vs_rest };

// Multiclass ensemble over standardized features. one_vs_one trains one
// machine per class pair; one_vs_rest trains one machine per class against
// everything else (class_pairs second entry is -1 there).
struct SvmModel {
    MulticlassStrategy strategy = MulticlassStrategy::one_vs_one;
    std::vector<std::pair<int, int>> class_pairs;  // ascending (a, b)
    std::vector<BinarySvm> machines;
    std::vector<int> classes;  // observed class labels, ascending
    Scaler scaler;
    int n_features = 0;
};

SvmModel fit_multiclass(const FeatureMatrix& X, std::span<const int> y, KernelParams params,
                        int max_passes = 200, uint64_t seed = 0,
                        MulticlassStrategy strategy = MulticlassStrategy::one_vs_one);

struct SvmVote {
    int predicted = 0;
    std::vector<int> votes;  // per class in `classes` order, re-indexed by label
};

// one_vs_one: majority vote over the pairwise machines, ties to the class
// with the largest sum of |decision values| over its machines, then lowest
// index. one_vs_rest: argmax of the per-class decision values; votes count
// machines with a positive decision.
SvmVote svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace demgrade
