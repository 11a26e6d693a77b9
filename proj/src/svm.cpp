#include "demgrade/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "demgrade/parallel.hpp"
#include "demgrade/rng.hpp"

namespace demgrade {

namespace {

void validate_params(const KernelParams& p) {
    if (p.degree < 1) throw ArgumentError("kernel degree must be >= 1");
    if (p.C <= 0.0) throw ArgumentError("C must be positive");
    if (p.tol <= 0.0 || p.tol >= 1.0) throw ArgumentError("tol must be in (0, 1)");
}

double pooled_variance(const FeatureMatrix& X) {
    if (X.values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : X.values) mean += v;
    mean /= static_cast<double>(X.values.size());
    double var = 0.0;
    for (double v : X.values) var += (v - mean) * (v - mean);
    return var / static_cast<double>(X.values.size());
}

double resolve_gamma(const KernelParams& p, const FeatureMatrix& X) {
    if (p.gamma > 0.0) return p.gamma;
    const double var = pooled_variance(X);
    const double d = static_cast<double>(X.cols);
    if (var > 1e-12) return 1.0 / (d * var);
    return 1.0 / d;
}

double ipow(double base, int exponent) {
    double result = 1.0;
    for (int i = 0; i < exponent; ++i) result *= base;
    return result;
}

}  // namespace

double poly_kernel(std::span<const double> x, std::span<const double> z, const KernelParams& p) {
    if (x.size() != z.size()) throw ArgumentError("poly_kernel: vector lengths differ");
    double dot = 0.0;
    for (size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
    return ipow(p.gamma * dot + p.coef0, p.degree);
}

double BinarySvm::decision(std::span<const double> x) const {
    double f = bias;
    for (size_t i = 0; i < support_vectors.size(); ++i)
        f += dual_coefs[i] * poly_kernel(support_vectors[i], x, params);
    return f;
}

double BinarySvm::dual_objective() const {
    double sum_alpha = 0.0;
    for (double c : dual_coefs) sum_alpha += std::abs(c);
    double quad = 0.0;
    for (size_t i = 0; i < support_vectors.size(); ++i)
        for (size_t j = 0; j < support_vectors.size(); ++j)
            quad += dual_coefs[i] * dual_coefs[j] *
                    poly_kernel(support_vectors[i], support_vectors[j], params);
    return sum_alpha - 0.5 * quad;
}

namespace {

// Gram access: full matrix below a memory budget, else an LRU of rows.
class KernelCache {
public:
    KernelCache(const FeatureMatrix& X, const KernelParams& p) : X_(X), p_(p), n_(X.rows) {
        diag_.resize(n_);
        for (size_t i = 0; i < n_; ++i) diag_[i] = poly_kernel(X_.row(i), X_.row(i), p_);
        full_ = n_ * n_ * sizeof(double) <= kFullBudgetBytes;
        if (full_) {
            matrix_.resize(n_ * n_);
            parallel_for(n_, [&](size_t i) {
                for (size_t j = 0; j <= i; ++j) {
                    const double k = poly_kernel(X_.row(i), X_.row(j), p_);
                    matrix_[i * n_ + j] = k;
                    matrix_[j * n_ + i] = k;
                }
            });
        } else {
            const size_t rows = std::max<size_t>(2, kLruBudgetBytes / (n_ * sizeof(double)));
            slots_.resize(std::min(rows, n_));
            for (auto& s : slots_) s.values.resize(n_);
        }
    }

    double diag(size_t i) const { return diag_[i]; }

    const double* row(size_t i) {
        if (full_) return matrix_.data() + i * n_;
        for (auto& s : slots_)
            if (s.index == static_cast<ptrdiff_t>(i)) {
                s.age = ++clock_;
                return s.values.data();
            }
        Slot* victim = &slots_[0];
        for (auto& s : slots_)
            if (s.age < victim->age) victim = &s;
        victim->index = static_cast<ptrdiff_t>(i);
        victim->age = ++clock_;
        for (size_t j = 0; j < n_; ++j) victim->values[j] = poly_kernel(X_.row(i), X_.row(j), p_);
        return victim->values.data();
    }

private:
    static constexpr size_t kFullBudgetBytes = 288ull << 20;
    static constexpr size_t kLruBudgetBytes = 64ull << 20;

    struct Slot {
        ptrdiff_t index = -1;
        uint64_t age = 0;
        std::vector<double> values;
    };

    const FeatureMatrix& X_;
    KernelParams p_;
    size_t n_;
    bool full_ = false;
    std::vector<double> matrix_;
    std::vector<double> diag_;
    std::vector<Slot> slots_;
    uint64_t clock_ = 0;
};

class SmoSolver {
public:
    SmoSolver(const FeatureMatrix& X, std::span<const int> y, const KernelParams& p,
              int max_passes, uint64_t seed)
        : X_(X), y_(y), p_(p), n_(X.rows), max_passes_(max_passes), rng_(seed), cache_(X, p) {
        alpha_.assign(n_, 0.0);
        f_.assign(n_, 0.0);  // all alphas start at 0, so f = b = 0
    }

    BinarySvm solve() {
        int num_changed = 0;
        bool examine_all = true;
        int passes = 0;
        while ((num_changed > 0 || examine_all) && passes < max_passes_) {
            num_changed = 0;
            if (examine_all) {
                for (size_t i = 0; i < n_; ++i) num_changed += examine(i);
            } else {
                for (size_t i = 0; i < n_; ++i)
                    if (is_free(alpha_[i])) num_changed += examine(i);
            }
            if (examine_all)
                examine_all = false;
            else if (num_changed == 0)
                examine_all = true;
            passes++;
        }
        recompute_bias();

        BinarySvm model;
        model.params = p_;
        model.bias = b_;
        model.converged = kkt_satisfied(p_.tol);
        for (size_t i = 0; i < n_; ++i) {
            if (alpha_[i] > 1e-10) {
                model.support_vectors.emplace_back(X_.row(i).begin(), X_.row(i).end());
                model.dual_coefs.push_back(alpha_[i] * y_[i]);
            }
        }
        return model;
    }

private:
    bool is_free(double a) const { return a > 0.0 && a < p_.C; }

    // The dual fixes b only up to an interval when every alpha sits at a
    // bound; the pairwise updates may leave it outside. Re-center it from
    // the KKT constraints: free points pin it exactly (averaged), otherwise
    // take the midpoint of the feasible interval.
    void recompute_bias() {
        double free_sum = 0.0;
        size_t free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n_; ++i) {
            const double g = f_[i] - b_;  // kernel part of the decision
            if (is_free(alpha_[i])) {
                free_sum += y_[i] - g;
                free_count++;
            } else if (alpha_[i] <= 0.0) {
                if (y_[i] > 0)
                    lo = std::max(lo, 1.0 - g);
                else
                    hi = std::min(hi, -1.0 - g);
            } else {  // at C
                if (y_[i] > 0)
                    hi = std::min(hi, 1.0 - g);
                else
                    lo = std::max(lo, -1.0 - g);
            }
        }
        double b_new = b_;
        if (free_count > 0)
            b_new = free_sum / static_cast<double>(free_count);
        else if (std::isfinite(lo) && std::isfinite(hi))
            b_new = (lo + hi) / 2.0;
        else if (std::isfinite(lo))
            b_new = lo;
        else if (std::isfinite(hi))
            b_new = hi;
        const double shift = b_new - b_;
        for (double& f : f_) f += shift;
        b_ = b_new;
    }

    bool kkt_satisfied(double tol) const {
        for (size_t i = 0; i < n_; ++i) {
            const double margin = y_[i] * f_[i];
            if (alpha_[i] <= 0.0) {
                if (margin < 1.0 - tol) return false;
            } else if (alpha_[i] >= p_.C) {
                if (margin > 1.0 + tol) return false;
            } else {
                if (std::abs(margin - 1.0) > tol) return false;
            }
        }
        return true;
    }

    int examine(size_t i2) {
        const double y2 = y_[i2];
        const double a2 = alpha_[i2];
        const double e2 = f_[i2] - y2;
        const double r2 = e2 * y2;
        const bool violates =
            (r2 < -p_.tol && a2 < p_.C) || (r2 > p_.tol && a2 > 0.0);
        if (!violates) return 0;

        // Second-choice heuristic: the free point maximizing |E1 - E2|,
        // ties to the lowest index.
        ptrdiff_t best = -1;
        double best_gap = -1.0;
        for (size_t i = 0; i < n_; ++i) {
            if (!is_free(alpha_[i])) continue;
            const double gap = std::abs((f_[i] - y_[i]) - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = static_cast<ptrdiff_t>(i);
            }
        }
        if (best >= 0 && take_step(static_cast<size_t>(best), i2)) return 1;

        // Fallback scans from seeded offsets.
        const size_t start_free = static_cast<size_t>(rng_.next_below(n_));
        for (size_t k = 0; k < n_; ++k) {
            const size_t i1 = (start_free + k) % n_;
            if (is_free(alpha_[i1]) && take_step(i1, i2)) return 1;
        }
        const size_t start_all = static_cast<size_t>(rng_.next_below(n_));
        for (size_t k = 0; k < n_; ++k) {
            const size_t i1 = (start_all + k) % n_;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(size_t i1, size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha_[i1];
        const double a2 = alpha_[i2];
        const double y1 = y_[i1];
        const double y2 = y_[i2];
        const double e1 = f_[i1] - y1;
        const double e2 = f_[i2] - y2;
        const double s = y1 * y2;

        double low, high;
        if (y1 != y2) {
            low = std::max(0.0, a2 - a1);
            high = std::min(p_.C, p_.C + a2 - a1);
        } else {
            low = std::max(0.0, a1 + a2 - p_.C);
            high = std::min(p_.C, a1 + a2);
        }
        if (low >= high) return false;

        const double k11 = cache_.diag(i1);
        const double k22 = cache_.diag(i2);
        const double* row1 = cache_.row(i1);
        const double k12 = row1[i2];
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, low, high);
        } else {
            // Objective at both clip ends (Platt's negative-objective form).
            const double f1 = y1 * (e1 + b_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 + b_) - a2 * k22 - s * a1 * k12;
            const double l1 = a1 + s * (a2 - low);
            const double h1 = a1 + s * (a2 - high);
            const double l_obj = l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 +
                                 0.5 * low * low * k22 + s * low * l1 * k12;
            const double h_obj = h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11 +
                                 0.5 * high * high * k22 + s * high * h1 * k12;
            if (l_obj < h_obj - kEps)
                a2_new = low;
            else if (l_obj > h_obj + kEps)
                a2_new = high;
            else
                return false;
        }
        if (std::abs(a2_new - a2) < kEps * (a2_new + a2 + kEps)) return false;
        const double a1_new = a1 + s * (a2 - a2_new);

        const double delta1 = y1 * (a1_new - a1);
        const double delta2 = y2 * (a2_new - a2);
        const double b1 = b_ - e1 - delta1 * k11 - delta2 * k12;
        const double b2 = b_ - e2 - delta1 * k12 - delta2 * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < p_.C)
            b_new = b1;
        else if (a2_new > 0.0 && a2_new < p_.C)
            b_new = b2;
        else
            b_new = (b1 + b2) / 2.0;

        const double* row2 = cache_.row(i2);
        row1 = cache_.row(i1);  // may have been evicted by the row2 fetch
        const double b_shift = b_new - b_;
        for (size_t j = 0; j < n_; ++j) f_[j] += delta1 * row1[j] + delta2 * row2[j] + b_shift;

        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        b_ = b_new;
        return true;
    }

    static constexpr double kEps = 1e-10;

    const FeatureMatrix& X_;
    std::span<const int> y_;
    KernelParams p_;
    size_t n_;
    int max_passes_;
    SplitMix64 rng_;
    KernelCache cache_;
    std::vector<double> alpha_;
    std::vector<double> f_;
    double b_ = 0.0;
};

}  // namespace

BinarySvm smo_fit_binary(const FeatureMatrix& X, std::span<const int> y, KernelParams params,
                         int max_passes, uint64_t seed) {
    if (X.rows != y.size()) throw ArgumentError("smo_fit_binary: X and y row counts differ");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        if (label == 1)
            has_pos = true;
        else if (label == -1)
            has_neg = true;
        else
            throw ArgumentError("smo_fit_binary: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw ArgumentError("smo_fit_binary: both classes must be present");
    params.gamma = resolve_gamma(params, X);
    validate_params(params);

    SmoSolver solver(X, y, params, max_passes, seed);
    return solver.solve();
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) throw ArgumentError("scaler: feature vector length mismatch");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) * scale[i];
    return out;
}

Scaler fit_scaler(const FeatureMatrix& X) {
    if (X.rows == 0) throw ArgumentError("fit_scaler: empty matrix");
    Scaler s;
    s.mean.assign(X.cols, 0.0);
    s.scale.assign(X.cols, 1.0);
    for (size_t r = 0; r < X.rows; ++r)
        for (size_t c = 0; c < X.cols; ++c) s.mean[c] += X.at(r, c);
    for (double& m : s.mean) m /= static_cast<double>(X.rows);
    std::vector<double> var(X.cols, 0.0);
    for (size_t r = 0; r < X.rows; ++r)
        for (size_t c = 0; c < X.cols; ++c) {
            const double d = X.at(r, c) - s.mean[c];
            var[c] += d * d;
        }
    for (size_t c = 0; c < X.cols; ++c) {
        var[c] /= static_cast<double>(X.rows);
        const double sd = std::sqrt(var[c]);
        s.scale[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
}

SvmModel fit_multiclass(const FeatureMatrix& X, std::span<const int> y, KernelParams params,
                        int max_passes, uint64_t seed, MulticlassStrategy strategy) {
    if (X.rows != y.size()) throw ArgumentError("fit_multiclass: X and y row counts differ");
    std::vector<int> classes(y.begin(), y.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw ArgumentError("fit_multiclass: need at least 2 classes");

    SvmModel model;
    model.strategy = strategy;
    model.classes = classes;
    model.n_features = static_cast<int>(X.cols);
    model.scaler = fit_scaler(X);

    FeatureMatrix Xs(X.rows, X.cols);
    for (size_t r = 0; r < X.rows; ++r) {
        const auto scaled = model.scaler.apply(X.row(r));
        std::copy(scaled.begin(), scaled.end(), Xs.row(r).begin());
    }
    params.gamma = resolve_gamma(params, Xs);
    validate_params(params);

    if (strategy == MulticlassStrategy::one_vs_one) {
        for (size_t a = 0; a < classes.size(); ++a)
            for (size_t b = a + 1; b < classes.size(); ++b)
                model.class_pairs.emplace_back(classes[a], classes[b]);
    } else {
        for (int c : classes) model.class_pairs.emplace_back(c, -1);
    }
    model.machines.resize(model.class_pairs.size());

    // The machines are independent; memory for the Gram matrices bounds how
    // many run at once.
    size_t largest = 0;
    std::vector<std::vector<size_t>> machine_rows(model.class_pairs.size());
    for (size_t m = 0; m < model.class_pairs.size(); ++m) {
        const auto [ca, cb] = model.class_pairs[m];
        for (size_t r = 0; r < X.rows; ++r)
            if (cb < 0 || y[r] == ca || y[r] == cb) machine_rows[m].push_back(r);
        largest = std::max(largest, machine_rows[m].size());
    }
    auto train_machine = [&](size_t m) {
        const auto [ca, cb] = model.class_pairs[m];
        (void)cb;
        FeatureMatrix Xp(machine_rows[m].size(), X.cols);
        std::vector<int> yp(machine_rows[m].size());
        for (size_t i = 0; i < machine_rows[m].size(); ++i) {
            const size_t r = machine_rows[m][i];
            std::copy(Xs.row(r).begin(), Xs.row(r).end(), Xp.row(i).begin());
            yp[i] = y[r] == ca ? 1 : -1;
        }
        model.machines[m] = smo_fit_binary(Xp, yp, params, max_passes, derive_seed(seed, m));
    };
    if (largest <= 2048)
        parallel_for(model.class_pairs.size(), train_machine);
    else
        for (size_t m = 0; m < model.class_pairs.size(); ++m) train_machine(m);
    return model;
}

SvmVote svm_predict(const SvmModel& model, std::span<const double> x) {
    if (x.size() != static_cast<size_t>(model.n_features))
        throw ArgumentError("svm_predict: feature vector has wrong length");
    const std::vector<double> xs = model.scaler.apply(x);

    SvmVote result;
    result.votes.assign(model.classes.size(), 0);
    auto class_pos = [&](int label) {
        return static_cast<size_t>(
            std::lower_bound(model.classes.begin(), model.classes.end(), label) -
            model.classes.begin());
    };

    if (model.strategy == MulticlassStrategy::one_vs_rest) {
        std::vector<double> decision(model.classes.size(), 0.0);
        for (size_t m = 0; m < model.machines.size(); ++m) {
            const double f = model.machines[m].decision(xs);
            const size_t pos = class_pos(model.class_pairs[m].first);
            decision[pos] = f;
            if (f > 0.0) result.votes[pos]++;
        }
        size_t best = 0;
        for (size_t c = 1; c < decision.size(); ++c)
            if (decision[c] > decision[best]) best = c;
        result.predicted = model.classes[best];
        return result;
    }

    std::vector<double> magnitude(model.classes.size(), 0.0);
    for (size_t m = 0; m < model.machines.size(); ++m) {
        const auto [ca, cb] = model.class_pairs[m];
        const double f = model.machines[m].decision(xs);
        const size_t pa = class_pos(ca);
        const size_t pb = class_pos(cb);
        if (f >= 0.0)
            result.votes[pa]++;
        else
            result.votes[pb]++;
        magnitude[pa] += std::abs(f);
        magnitude[pb] += std::abs(f);
    }
    size_t best = 0;
    for (size_t c = 1; c < model.classes.size(); ++c) {
        if (result.votes[c] > result.votes[best] ||
            (result.votes[c] == result.votes[best] && magnitude[c] > magnitude[best]))
            best = c;
    }
    result.predicted = model.classes[best];
    return result;
}

}  // namespace demgrade
