#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "demgrade/binio.hpp"
#include "demgrade/eval.hpp"
#include "demgrade/errors.hpp"
#include "demgrade/image.hpp"
#include "demgrade/rng.hpp"

using namespace demgrade;

namespace {

// The hand-derived 3-class fixture:
//   y_true = [0,0,1,2,2,2], y_pred = [0,1,1,2,2,0]
ConfusionMatrix fixture_matrix() {
    const std::vector<int> y_true = {0, 0, 1, 2, 2, 2};
    const std::vector<int> y_pred = {0, 1, 1, 2, 2, 0};
    return confusion_matrix(y_true, y_pred, 3);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("confusion matrix fixtures") {
    SUBCASE("perfect predictions are diagonal") {
        const std::vector<int> y = {0, 1, 2, 3, 2, 1};
        const ConfusionMatrix cm = confusion_matrix(y, y, 4);
        CHECK(cm.trace() == 6);
        CHECK(cm.total() == 6);
        CHECK(score(cm).accuracy == doctest::Approx(1.0));
    }
    SUBCASE("swapped predictions are antidiagonal") {
        const std::vector<int> y_true = {0, 1};
        const std::vector<int> y_pred = {1, 0};
        const ConfusionMatrix cm = confusion_matrix(y_true, y_pred, 2);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 0) == 1);
        CHECK(cm.trace() == 0);
        CHECK(score(cm).accuracy == doctest::Approx(0.0));
    }
    SUBCASE("hand-counted 3-class fixture") {
        const ConfusionMatrix cm = fixture_matrix();
        CHECK(cm.at(0, 0) == 1);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(0, 2) == 0);
        CHECK(cm.at(1, 0) == 0);
        CHECK(cm.at(1, 1) == 1);
        CHECK(cm.at(1, 2) == 0);
        CHECK(cm.at(2, 0) == 1);
        CHECK(cm.at(2, 1) == 0);
        CHECK(cm.at(2, 2) == 2);
        CHECK(score(cm).accuracy == doctest::Approx(4.0 / 6.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{0}, 2),
                        ArgumentError);
        CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0, 2}, std::vector<int>{0, 0}, 2),
                        ArgumentError);
    }
}

TEST_CASE("score on the hand-derived fixture") {
    const ScoreCard card = score(fixture_matrix());
    CHECK(card.precision[0] == doctest::Approx(0.5));
    CHECK(card.precision[1] == doctest::Approx(0.5));
    CHECK(card.precision[2] == doctest::Approx(1.0));
    CHECK(card.recall[0] == doctest::Approx(0.5));
    CHECK(card.recall[1] == doctest::Approx(1.0));
    CHECK(card.recall[2] == doctest::Approx(2.0 / 3.0));
    // macro-F1 = mean(0.5, 2/3, 0.8) = 0.65556
    CHECK(card.macro_f1 == doctest::Approx(0.6556).epsilon(1e-4));
}

TEST_CASE("degenerate single-class matrix flags undefined scores") {
    const std::vector<int> y = {1, 1, 1};
    const ConfusionMatrix cm = confusion_matrix(y, y, 3);
    const ScoreCard card = score(cm);
    CHECK(card.precision[1] == doctest::Approx(1.0));
    CHECK(card.recall[1] == doctest::Approx(1.0));
    CHECK(card.f1[1] == doctest::Approx(1.0));
    CHECK(card.precision[0] == 0.0);
    CHECK(card.precision_undefined[0]);
    CHECK(card.recall_undefined[0]);
    CHECK(card.precision_undefined[2]);
    CHECK_FALSE(card.precision_undefined[1]);
}

TEST_CASE("score rejects empty input") {
    CHECK_THROWS_AS(score(ConfusionMatrix(3)), ArgumentError);
}

TEST_CASE("aggregate identities on random prediction vectors (property)") {
    SplitMix64 rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(4));
        const size_t n = 5 + rng.next_below(60);
        std::vector<int> y_true(n), y_pred(n);
        for (size_t i = 0; i < n; ++i) {
            y_true[i] = static_cast<int>(rng.next_below(static_cast<uint64_t>(k)));
            y_pred[i] = static_cast<int>(rng.next_below(static_cast<uint64_t>(k)));
        }
        const ConfusionMatrix cm = confusion_matrix(y_true, y_pred, k);
        const ScoreCard card = score(cm);

        // Weighted recall equals accuracy for single-label multiclass.
        CHECK(card.weighted_recall == doctest::Approx(card.accuracy).epsilon(1e-12));

        // Micro precision = micro recall = accuracy.
        int64_t tp = cm.trace();
        int64_t fp = cm.total() - tp;
        const double micro_p = static_cast<double>(tp) / static_cast<double>(tp + fp);
        CHECK(micro_p == doctest::Approx(card.accuracy).epsilon(1e-12));

        // Permuting the samples leaves the matrix unchanged.
        std::vector<size_t> perm(n);
        for (size_t i = 0; i < n; ++i) perm[i] = i;
        shuffle(perm, rng);
        std::vector<int> yt2(n), yp2(n);
        for (size_t i = 0; i < n; ++i) {
            yt2[i] = y_true[perm[i]];
            yp2[i] = y_pred[perm[i]];
        }
        CHECK(confusion_matrix(yt2, yp2, k).counts == cm.counts);

        // All reported scores stay within [0, 1].
        for (int c = 0; c < k; ++c) {
            CHECK(card.precision[static_cast<size_t>(c)] >= 0.0);
            CHECK(card.precision[static_cast<size_t>(c)] <= 1.0);
            CHECK(card.f1[static_cast<size_t>(c)] >= 0.0);
            CHECK(card.f1[static_cast<size_t>(c)] <= 1.0);
        }
    }
}

TEST_CASE("comparison table renders the reference row format") {
    // Rendering fixture: a scorecard with the headline WS+SVM numbers must
    // print as 96.25 / 98.00 / 97.00 / 97.00.
    ScoreCard card;
    card.accuracy = 0.9625;
    card.macro_precision = 0.98;
    card.macro_recall = 0.97;
    card.macro_f1 = 0.97;
    const std::string text = comparison_text({{"WS+SVM", card}});
    CHECK(text.find("WS+SVM") != std::string::npos);
    CHECK(text.find("96.25") != std::string::npos);
    CHECK(text.find("98.00") != std::string::npos);
    CHECK(text.find("97.00") != std::string::npos);
}

TEST_CASE("single run is trivially best; ties mark both rows") {
    ScoreCard a;
    a.accuracy = 0.5;
    a.macro_precision = a.macro_recall = a.macro_f1 = 0.5;
    const std::string solo = comparison_text({{"ONLY", a}});
    CHECK(solo.find("50.00*") != std::string::npos);

    ScoreCard b = a;
    b.macro_f1 = 0.25;
    const std::string two = comparison_text({{"A", a}, {"B", b}});
    // Accuracy ties: both marked.
    size_t first = two.find("50.00*");
    REQUIRE(first != std::string::npos);
    size_t second = two.find("50.00*", first + 1);
    CHECK(second != std::string::npos);
}

TEST_CASE("csv has one row per run") {
    ScoreCard a;
    a.accuracy = 0.5;
    const std::string csv = comparison_csv({{"A", a}, {"B", a}, {"C", a}});
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    CHECK(csv.rfind("model,accuracy", 0) == 0);
}

TEST_CASE("confusion outputs") {
    const auto dir = std::filesystem::temp_directory_path() / "demgrade_test_eval";
    std::filesystem::create_directories(dir);
    const ConfusionMatrix cm = fixture_matrix();
    write_confusion_csv(cm, dir / "cm.csv");
    CHECK(read_file_text(dir / "cm.csv") == "1,1,0\n0,1,0\n1,0,2\n");
    write_confusion_pgm(cm, dir / "cm.pgm");
    const Image heat = read_pgm(dir / "cm.pgm");
    CHECK(heat.width == 3);
    CHECK(heat.height == 3);
    CHECK(heat.at(2, 2) == 255);  // max count scales to 255
    CHECK(heat.at(2, 0) == 0);
    CHECK(heat.at(0, 0) == 128);  // 1/2 of max, rounded
}

}  // TEST_SUITE
