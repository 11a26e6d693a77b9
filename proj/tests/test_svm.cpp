#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "demgrade/rng.hpp"
#include "demgrade/svm.hpp"
#include "oracles.hpp"

using namespace demgrade;

namespace {

struct TinyProblem {
    FeatureMatrix X;
    std::vector<int> y;
    KernelParams params;
};

// Random binary problem with <= max_points points and both labels present.
TinyProblem random_tiny_problem(SplitMix64& rng, size_t max_points) {
    TinyProblem p;
    const size_t n = 2 + rng.next_below(max_points - 1);
    const size_t d = 1 + rng.next_below(3);
    p.X = FeatureMatrix(n, d);
    for (auto& v : p.X.values) v = 4.0 * rng.next_double() - 2.0;
    p.y.resize(n);
    for (auto& label : p.y) label = rng.next_below(2) ? 1 : -1;
    p.y[0] = 1;  // both classes always present
    p.y[n - 1] = -1;

    p.params.degree = 1 + static_cast<int>(rng.next_below(3));
    p.params.gamma = 0.3 + 1.7 * rng.next_double();
    p.params.coef0 = rng.next_double();
    p.params.C = rng.next_below(2) ? 1.0 : 10.0;
    p.params.tol = 1e-5;
    return p;
}

std::vector<std::vector<double>> q_matrix(const TinyProblem& p) {
    const size_t n = p.X.rows;
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            Q[i][j] = p.y[i] * p.y[j] * poly_kernel(p.X.row(i), p.X.row(j), p.params);
    return Q;
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("poly_kernel fixtures") {
    KernelParams p;
    p.degree = 3;
    p.gamma = 1.0;
    p.coef0 = 0.0;
    SUBCASE("zero vector with zero coef0") {
        CHECK(poly_kernel(std::vector<double>{0, 0}, std::vector<double>{1, 2}, p) ==
              doctest::Approx(0.0));
    }
    SUBCASE("(1,1).(1,1) cubed is 8") {
        CHECK(poly_kernel(std::vector<double>{1, 1}, std::vector<double>{1, 1}, p) ==
              doctest::Approx(8.0));
    }
    SUBCASE("symmetry on random pairs") {
        SplitMix64 rng(31);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> x(4), z(4);
            for (auto& v : x) v = rng.next_gaussian();
            for (auto& v : z) v = rng.next_gaussian();
            p.coef0 = rng.next_double();
            p.degree = 1 + static_cast<int>(rng.next_below(4));
            CHECK(poly_kernel(x, z, p) == doctest::Approx(poly_kernel(z, x, p)));
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(poly_kernel(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, p),
                        ArgumentError);
    }
}

TEST_CASE("gram matrix is PSD for coef0 >= 0 (property)") {
    SplitMix64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 3 + rng.next_below(8);
        KernelParams p;
        p.degree = 1 + static_cast<int>(rng.next_below(3));
        p.gamma = 0.2 + rng.next_double();
        p.coef0 = trial % 2 ? 0.0 : rng.next_double();
        FeatureMatrix X(n, 3);
        for (auto& v : X.values) v = rng.next_gaussian();
        std::vector<std::vector<double>> G(n, std::vector<double>(n));
        double scale = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                G[i][j] = poly_kernel(X.row(i), X.row(j), p);
                scale = std::max(scale, std::abs(G[i][j]));
            }
        CHECK(oracles::cholesky_psd_with_jitter(G, 1e-8 * std::max(1.0, scale)));
    }
}

TEST_CASE("smo: symmetric two-point problem") {
    FeatureMatrix X(2, 1);
    X.at(0, 0) = -1.0;
    X.at(1, 0) = 1.0;
    const std::vector<int> y = {-1, 1};
    KernelParams p;
    p.degree = 1;
    p.gamma = 1.0;
    p.coef0 = 0.0;
    p.C = 10.0;
    p.tol = 1e-4;
    const BinarySvm m = smo_fit_binary(X, y, p, 200, 0);
    CHECK(m.converged);
    CHECK(m.decision(std::vector<double>{0.0}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(m.decision(std::vector<double>{1.0}) > 0.0);
    CHECK(m.decision(std::vector<double>{-1.0}) < 0.0);
}

TEST_CASE("smo: 4-point 1-D dual matches the tiny-QP oracle") {
    TinyProblem p;
    p.X = FeatureMatrix(4, 1);
    p.X.at(0, 0) = -2.0;
    p.X.at(1, 0) = -1.0;
    p.X.at(2, 0) = 1.0;
    p.X.at(3, 0) = 2.0;
    p.y = {1, 1, -1, -1};
    p.params.degree = 1;
    p.params.gamma = 1.0;
    p.params.coef0 = 0.0;
    p.params.C = 10.0;
    p.params.tol = 1e-5;
    const BinarySvm m = smo_fit_binary(p.X, p.y, p.params, 500, 0);
    const double oracle = oracles::tiny_qp_max(q_matrix(p), p.y, p.params.C);
    CHECK(std::abs(m.dual_objective() - oracle) <= 1e-3);
}

TEST_CASE("smo: degree-3 kernel separates XOR") {
    FeatureMatrix X(4, 2);
    const double pts[4][2] = {{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
    for (int i = 0; i < 4; ++i) {
        X.at(static_cast<size_t>(i), 0) = pts[i][0];
        X.at(static_cast<size_t>(i), 1) = pts[i][1];
    }
    const std::vector<int> y = {1, 1, -1, -1};
    KernelParams p;
    p.degree = 3;
    p.gamma = 1.0;
    p.coef0 = 1.0;  // the homogeneous cubic cannot separate +-1 XOR
    p.C = 10.0;
    p.tol = 1e-4;
    const BinarySvm m = smo_fit_binary(X, y, p, 200, 0);
    for (size_t i = 0; i < 4; ++i)
        CHECK((m.decision(X.row(i)) > 0 ? 1 : -1) == y[i]);
}

TEST_CASE("smo: random tiny problems match the QP oracle and honor KKT") {
    SplitMix64 rng(33);
    for (int trial = 0; trial < 25; ++trial) {
        const TinyProblem p = random_tiny_problem(rng, 6);
        const BinarySvm m = smo_fit_binary(p.X, p.y, p.params, 2000, trial);
        const double oracle = oracles::tiny_qp_max(q_matrix(p), p.y, p.params.C);
        CHECK(std::abs(m.dual_objective() - oracle) <= 1e-3);

        // Dual feasibility: 0 <= alpha <= C, |sum alpha_i y_i| <= 10 tol.
        double eq = 0.0;
        for (double coef : m.dual_coefs) {
            CHECK(std::abs(coef) <= p.params.C * (1.0 + 1e-9));
            eq += coef;
        }
        CHECK(std::abs(eq) <= 10.0 * p.params.tol);

        // KKT within 10 tol at every training point.
        for (size_t i = 0; i < p.X.rows; ++i) {
            const double margin = p.y[i] * m.decision(p.X.row(i));
            double alpha = 0.0;
            for (size_t s = 0; s < m.support_vectors.size(); ++s)
                if (std::equal(m.support_vectors[s].begin(), m.support_vectors[s].end(),
                               p.X.row(i).begin()))
                    alpha = std::abs(m.dual_coefs[s]);
            if (alpha < 1e-9)
                CHECK(margin >= 1.0 - 10.0 * p.params.tol);
            else if (alpha > p.params.C - 1e-9)
                CHECK(margin <= 1.0 + 10.0 * p.params.tol);
            else
                CHECK(std::abs(margin - 1.0) <= 10.0 * p.params.tol);
        }
    }
}

TEST_CASE("smo: margin property on a separable toy set") {
    SplitMix64 rng(34);
    FeatureMatrix X(12, 2);
    std::vector<int> y(12);
    for (size_t i = 0; i < 12; ++i) {
        const bool pos = i < 6;
        X.at(i, 0) = (pos ? 2.5 : -2.5) + 0.5 * rng.next_gaussian();
        X.at(i, 1) = 0.5 * rng.next_gaussian();
        y[i] = pos ? 1 : -1;
    }
    KernelParams p;
    p.degree = 2;
    p.gamma = 0.5;
    p.coef0 = 1.0;
    p.C = 5.0;
    p.tol = 1e-5;
    const BinarySvm m = smo_fit_binary(X, y, p, 2000, 0);
    CHECK(m.converged);
    for (size_t s = 0; s < m.support_vectors.size(); ++s) {
        const double alpha = std::abs(m.dual_coefs[s]);
        if (alpha > 1e-9 && alpha < p.C - 1e-9) {
            const double margin = (m.dual_coefs[s] > 0 ? 1.0 : -1.0) *
                                  m.decision(m.support_vectors[s]);
            CHECK(std::abs(margin - 1.0) <= 10.0 * p.tol);
        }
    }
}

TEST_CASE("smo: duplicating samples with doubled C preserves decisions") {
    SplitMix64 rng(35);
    FeatureMatrix X(8, 2);
    std::vector<int> y(8);
    for (size_t i = 0; i < 8; ++i) {
        const bool pos = i < 4;
        X.at(i, 0) = (pos ? 2.0 : -2.0) + 0.3 * rng.next_gaussian();
        X.at(i, 1) = 0.3 * rng.next_gaussian();
        y[i] = pos ? 1 : -1;
    }
    KernelParams base;
    base.degree = 3;
    base.gamma = 0.4;
    base.coef0 = 1.0;
    base.tol = 1e-6;
    KernelParams doubled = base;
    base.C = 2.0;
    doubled.C = 1.0;

    FeatureMatrix X2(16, 2);
    std::vector<int> y2;
    for (size_t i = 0; i < 16; ++i) {
        const size_t src = i % 8;
        std::copy(X.row(src).begin(), X.row(src).end(), X2.row(i).begin());
        y2.push_back(y[src]);
    }
    const BinarySvm m1 = smo_fit_binary(X, y, base, 5000, 0);
    const BinarySvm m2 = smo_fit_binary(X2, y2, doubled, 5000, 0);
    SplitMix64 probe_rng(36);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> probe = {3.0 * probe_rng.next_gaussian(),
                                     3.0 * probe_rng.next_gaussian()};
        CHECK(std::abs(m1.decision(probe) - m2.decision(probe)) <= 1e-6);
    }
}

TEST_CASE("smo input validation") {
    FeatureMatrix X(2, 1);
    X.at(0, 0) = 0.0;
    X.at(1, 0) = 1.0;
    KernelParams p;
    p.gamma = 1.0;
    CHECK_THROWS_AS(smo_fit_binary(X, std::vector<int>{1, 1}, p, 10, 0), ArgumentError);
    CHECK_THROWS_AS(smo_fit_binary(X, std::vector<int>{1, 2}, p, 10, 0), ArgumentError);
}

TEST_CASE("fit_multiclass structure") {
    SplitMix64 rng(37);
    const auto make_blobs = [&](int classes, int per_class) {
        FeatureMatrix X(static_cast<size_t>(classes) * per_class, 2);
        std::vector<int> y;
        for (int c = 0; c < classes; ++c)
            for (int i = 0; i < per_class; ++i) {
                const size_t row = static_cast<size_t>(c) * per_class + i;
                X.at(row, 0) = 4.0 * std::cos(2 * M_PI * c / classes) + 0.3 * rng.next_gaussian();
                X.at(row, 1) = 4.0 * std::sin(2 * M_PI * c / classes) + 0.3 * rng.next_gaussian();
                y.push_back(c);
            }
        return std::make_pair(X, y);
    };

    SUBCASE("4 classes give 6 machines in ascending pair order") {
        const auto [X, y] = make_blobs(4, 8);
        const SvmModel model = fit_multiclass(X, y, KernelParams{}, 200, 0);
        REQUIRE(model.machines.size() == 6);
        const std::vector<std::pair<int, int>> expected = {{0, 1}, {0, 2}, {0, 3},
                                                           {1, 2}, {1, 3}, {2, 3}};
        CHECK(model.class_pairs == expected);
    }
    SUBCASE("2 classes reduce to one machine's sign decision") {
        const auto [X, y] = make_blobs(2, 10);
        KernelParams p;
        p.coef0 = 1.0;
        p.C = 10.0;
        const SvmModel model = fit_multiclass(X, y, p, 200, 0);
        REQUIRE(model.machines.size() == 1);
        for (size_t i = 0; i < X.rows; ++i) {
            const double f = model.machines[0].decision(model.scaler.apply(X.row(i)));
            const int expected = f >= 0 ? 0 : 1;
            const SvmVote vote = svm_predict(model, X.row(i));
            CHECK(vote.predicted == expected);
            // Two classes: the vote count is 1-0 or 0-1.
            CHECK(vote.votes[static_cast<size_t>(expected)] == 1);
            CHECK(vote.votes[static_cast<size_t>(1 - expected)] == 0);
        }
    }
    SUBCASE("determinism") {
        const auto [X, y] = make_blobs(3, 8);
        const SvmModel a = fit_multiclass(X, y, KernelParams{}, 200, 9);
        const SvmModel b = fit_multiclass(X, y, KernelParams{}, 200, 9);
        REQUIRE(a.machines.size() == b.machines.size());
        for (size_t m = 0; m < a.machines.size(); ++m) {
            CHECK(a.machines[m].bias == b.machines[m].bias);
            CHECK(a.machines[m].dual_coefs == b.machines[m].dual_coefs);
        }
    }
    SUBCASE("fewer than two classes") {
        FeatureMatrix X(3, 1);
        CHECK_THROWS_AS(fit_multiclass(X, std::vector<int>{1, 1, 1}, KernelParams{}, 10, 0),
                        ArgumentError);
    }
    SUBCASE("one-vs-rest trains one machine per class") {
        const auto [X, y] = make_blobs(3, 10);
        KernelParams p;
        p.coef0 = 1.0;
        p.C = 10.0;
        const SvmModel model =
            fit_multiclass(X, y, p, 200, 0, MulticlassStrategy::one_vs_rest);
        REQUIRE(model.machines.size() == 3);
        CHECK(model.class_pairs ==
              std::vector<std::pair<int, int>>{{0, -1}, {1, -1}, {2, -1}});
        int correct = 0;
        for (size_t i = 0; i < X.rows; ++i)
            if (svm_predict(model, X.row(i)).predicted == y[i]) correct++;
        CHECK(correct >= 28);  // well-separated blobs
    }
}

TEST_CASE("svm_predict voting") {
    // Hand-built model: machines whose decision is the sign of a fixed
    // feature, so votes are controlled exactly.
    const auto constant_machine = [](double value) {
        // A single support vector with a linear kernel making f(x) = value
        // for the all-ones probe.
        BinarySvm m;
        m.params.degree = 1;
        m.params.gamma = 1.0;
        m.params.coef0 = 0.0;
        m.support_vectors = {{0.0}};
        m.dual_coefs = {0.0};
        m.bias = value;
        return m;
    };
    SvmModel model;
    model.n_features = 1;
    model.classes = {0, 1, 2};
    model.scaler.mean = {0.0};
    model.scaler.scale = {1.0};
    model.class_pairs = {{0, 1}, {0, 2}, {1, 2}};

    SUBCASE("unbeatable vote count") {
        model.machines = {constant_machine(1.0),   // 0 beats 1
                          constant_machine(1.0),   // 0 beats 2
                          constant_machine(-1.0)}; // 2 beats 1
        const SvmVote v = svm_predict(model, std::vector<double>{0.0});
        CHECK(v.predicted == 0);
        CHECK(v.votes == std::vector<int>{2, 0, 1});
    }
    SUBCASE("three-way tie resolved by decision magnitudes") {
        // 0>1 (|f|=0.2), 2>0 (|f|=0.9), 1>2 (|f|=0.5): one vote each.
        // Magnitude sums: class0 = 1.1, class1 = 0.7, class2 = 1.4 -> 2.
        model.machines = {constant_machine(0.2), constant_machine(-0.9),
                          constant_machine(0.5)};
        const SvmVote v = svm_predict(model, std::vector<double>{0.0});
        CHECK(v.votes == std::vector<int>{1, 1, 1});
        CHECK(v.predicted == 2);
    }
}

}  // TEST_SUITE
