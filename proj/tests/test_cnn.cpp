#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "demgrade/cnn.hpp"
#include "demgrade/rng.hpp"

using namespace demgrade;

namespace {

Tensor<double> random_tensor(SplitMix64& rng, int c, int h, int w, double scale = 1.0) {
    Tensor<double> t(c, h, w);
    for (auto& v : t.v) v = scale * rng.next_gaussian();
    return t;
}

void randomize_net(CnnNet<double>& net, SplitMix64& rng, double scale = 0.5) {
    for (auto& layer : net.params) {
        for (auto& w : layer.weights) w = scale * rng.next_gaussian();
        for (auto& b : layer.biases) b = 0.1 * rng.next_gaussian();
    }
}

double loss_of(const CnnNet<double>& net, const Tensor<double>& x, int label) {
    std::vector<LayerParams<double>> grads;
    const std::vector<Tensor<double>> batch = {x};
    const std::vector<int> labels = {label};
    return loss_and_grads<double>(net, batch, labels, grads);
}

// Central finite differences over every parameter and every input entry.
// Returns the worst absolute violation of |analytic - numeric| <=
// rel * max(|analytic|, |numeric|) + abs_floor, as (violation, location ok).
bool gradients_match(CnnNet<double>& net, const Tensor<double>& x, int label, double eps,
                     double rel, double abs_floor) {
    std::vector<LayerParams<double>> grads;
    {
        const std::vector<Tensor<double>> batch = {x};
        const std::vector<int> labels = {label};
        loss_and_grads<double>(net, batch, labels, grads);
    }
    bool ok = true;
    const auto check_entry = [&](double& slot, double analytic) {
        const double saved = slot;
        slot = saved + eps;
        const double up = loss_of(net, x, label);
        slot = saved - eps;
        const double down = loss_of(net, x, label);
        slot = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double bound = rel * std::max(std::abs(analytic), std::abs(numeric)) + abs_floor;
        if (std::abs(analytic - numeric) > bound) ok = false;
    };
    for (size_t l = 0; l < net.params.size(); ++l) {
        for (size_t j = 0; j < net.params[l].weights.size(); ++j)
            check_entry(net.params[l].weights[j], grads[l].weights[j]);
        for (size_t j = 0; j < net.params[l].biases.size(); ++j)
            check_entry(net.params[l].biases[j], grads[l].biases[j]);
    }

    // Input gradient via an explicit backward pass.
    ForwardCache<double> cache;
    const Tensor<double> logits = net.forward(x, &cache);
    const auto p = softmax<double>(logits.v);
    Tensor<double> dlogits(logits.ch, logits.h, logits.w);
    for (size_t c = 0; c < p.size(); ++c)
        dlogits.v[c] = p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
    auto zero = zero_like_params(net);
    Tensor<double> d_input;
    net.backward(cache, dlogits, zero, &d_input);
    Tensor<double> probe = x;
    for (size_t j = 0; j < probe.v.size(); ++j) {
        const double saved = probe.v[j];
        probe.v[j] = saved + eps;
        const double up = loss_of(net, probe, label);
        probe.v[j] = saved - eps;
        const double down = loss_of(net, probe, label);
        probe.v[j] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = d_input.v[j];
        const double bound = rel * std::max(std::abs(analytic), std::abs(numeric)) + abs_floor;
        if (std::abs(analytic - numeric) > bound) ok = false;
    }
    return ok;
}

CnnNet<double> make_net(const CnnArchitecture& arch, ShapeInfo input) {
    CnnNet<double> net;
    net.arch = arch;
    net.input_shape = input;
    net.build();
    return net;
}

}  // namespace

TEST_SUITE("cnn") {

TEST_CASE("param_count matches the published per-layer counts") {
    const auto counts = param_count(standard_architecture(), {1, 32, 32});
    std::vector<size_t> trainable;
    for (size_t c : counts)
        if (c > 0) trainable.push_back(c);
    CHECK(trainable == std::vector<size_t>{1664, 73856, 65664, 516});
    size_t total = 0;
    for (size_t c : counts) total += c;
    CHECK(total == 141700);
}

TEST_CASE("shape chain trace for the standard architecture") {
    const auto shapes = shape_chain(standard_architecture(), {1, 32, 32});
    const std::vector<ShapeInfo> expected = {
        {1, 32, 32},  {64, 28, 28}, {64, 28, 28}, {64, 14, 14}, {128, 12, 12}, {128, 12, 12},
        {128, 6, 6},  {128, 5, 5},  {128, 5, 5},  {128, 1, 1},  {4, 1, 1},
    };
    CHECK(shapes == expected);
}

TEST_CASE("shape errors") {
    CHECK_THROWS_AS(shape_chain({LayerSpec::conv(2, 9, 9)}, {1, 4, 4}), ShapeError);
    CHECK_THROWS_AS(shape_chain({LayerSpec::maxpool2()}, {1, 5, 6}), ShapeError);
}

TEST_CASE("conv2d fixtures") {
    SUBCASE("1x1 identity kernel") {
        SplitMix64 rng(81);
        const Tensor<double> in = random_tensor(rng, 1, 4, 4);
        const std::vector<double> w = {1.0};
        const std::vector<double> b = {0.0};
        const Tensor<double> out = conv2d<double>(in, w, b, 1, 1, 1);
        CHECK(out.v == in.v);
    }
    SUBCASE("3x3 ones kernel on constant-1 input") {
        const Tensor<double> in = [&] {
            Tensor<double> t(1, 5, 5);
            std::fill(t.v.begin(), t.v.end(), 1.0);
            return t;
        }();
        const std::vector<double> w(9, 1.0);
        const std::vector<double> b = {0.0};
        const Tensor<double> out = conv2d<double>(in, w, b, 1, 3, 3);
        CHECK(out.h == 3);
        CHECK(out.w == 3);
        for (double v : out.v) CHECK(v == doctest::Approx(9.0));
    }
    SUBCASE("2x2 kernel equals the four-term sums at all nine positions") {
        SplitMix64 rng(82);
        const Tensor<double> in = random_tensor(rng, 1, 4, 4);
        std::vector<double> w(4);
        for (auto& v : w) v = rng.next_gaussian();
        const std::vector<double> b = {0.3};
        const Tensor<double> out = conv2d<double>(in, w, b, 1, 2, 2);
        REQUIRE(out.h == 3);
        REQUIRE(out.w == 3);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                const double expect = b[0] + w[0] * in.at(0, y, x) + w[1] * in.at(0, y, x + 1) +
                                      w[2] * in.at(0, y + 1, x) + w[3] * in.at(0, y + 1, x + 1);
                CHECK(out.at(0, y, x) == doctest::Approx(expect).epsilon(1e-12));
            }
    }
    SUBCASE("kernel larger than input") {
        const Tensor<double> in(1, 2, 2);
        CHECK_THROWS_AS(conv2d<double>(in, std::vector<double>(9, 0.0),
                                       std::vector<double>(1, 0.0), 1, 3, 3),
                        ShapeError);
    }
}

TEST_CASE("maxpool2 fixtures") {
    SUBCASE("constant input ties to the top-left corner") {
        Tensor<double> in(1, 4, 4);
        std::fill(in.v.begin(), in.v.end(), 2.5);
        const auto [out, argmax] = maxpool2<double>(in);
        CHECK(out.v == std::vector<double>(4, 2.5));
        CHECK(argmax == std::vector<int32_t>{0, 2, 8, 10});
    }
    SUBCASE("2x2 input") {
        Tensor<double> in(1, 2, 2);
        in.v = {1, 2, 3, 4};
        const auto [out, argmax] = maxpool2<double>(in);
        CHECK(out.v == std::vector<double>{4.0});
        CHECK(argmax == std::vector<int32_t>{3});
    }
    SUBCASE("random 4x4 equals brute-force window max") {
        SplitMix64 rng(83);
        const Tensor<double> in = random_tensor(rng, 2, 4, 4);
        const auto [out, argmax] = maxpool2<double>(in);
        for (int c = 0; c < 2; ++c)
            for (int y = 0; y < 2; ++y)
                for (int x = 0; x < 2; ++x) {
                    const double expect =
                        std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                 std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
                    CHECK(out.at(c, y, x) == expect);
                }
    }
    SUBCASE("odd dims rejected") {
        CHECK_THROWS_AS(maxpool2<double>(Tensor<double>(1, 3, 4)), ShapeError);
    }
}

TEST_CASE("zero model predicts uniform probabilities") {
    CnnModel model;
    model.net.arch = standard_architecture();
    model.net.input_shape = {1, 32, 32};
    model.net.build();  // parameters stay zero
    Tensor<float> x(1, 32, 32);
    SplitMix64 rng(84);
    for (auto& v : x.v) v = static_cast<float>(rng.next_double());
    const CnnPrediction pred = cnn_predict(model, x);
    CHECK(pred.predicted == 0);  // argmax tie -> lowest
    for (double p : pred.probabilities) CHECK(p == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("uniform logits give ln(4) loss") {
    CnnNet<double> net = make_net(standard_architecture(), {1, 32, 32});
    Tensor<double> x(1, 32, 32);
    CHECK(loss_of(net, x, 1) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("confident correct logits drive the loss to zero") {
    CnnNet<double> net = make_net({LayerSpec::dense(4)}, {3, 1, 1});
    net.params[0].biases[2] = 40.0;  // huge margin for class 2
    Tensor<double> x(3, 1, 1);
    x.v = {0.1, 0.2, 0.3};
    CHECK(loss_of(net, x, 2) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(loss_of(net, x, 2) < 1e-12);
}

TEST_CASE("invalid label raises ArgumentError") {
    CnnNet<double> net = make_net({LayerSpec::dense(4)}, {3, 1, 1});
    std::vector<LayerParams<double>> grads;
    const std::vector<Tensor<double>> batch = {Tensor<double>(3, 1, 1)};
    const std::vector<int> labels = {4};
    CHECK_THROWS_AS(loss_and_grads<double>(net, batch, labels, grads), ArgumentError);
}

TEST_CASE("gradients match central finite differences on the tiny model") {
    // The 8x8-input, 2-filter model, eps = 1e-3.
    CnnNet<double> net = make_net(
        {LayerSpec::conv(2, 3, 3), LayerSpec::relu(), LayerSpec::maxpool2(),
         LayerSpec::conv(3, 2, 2), LayerSpec::relu(), LayerSpec::global_avg_pool(),
         LayerSpec::dense(4)},
        {1, 8, 8});
    SplitMix64 rng(85);
    randomize_net(net, rng);
    const Tensor<double> x = random_tensor(rng, 1, 8, 8);
    CHECK(gradients_match(net, x, 1, 1e-3, 1e-4, 2e-7));
}

TEST_CASE("gradients match finite differences across layer types") {
    struct Config {
        CnnArchitecture arch;
        ShapeInfo input;
    };
    const std::vector<Config> configs = {
        {{LayerSpec::conv(2, 3, 3), LayerSpec::relu(), LayerSpec::dense(3)}, {1, 6, 6}},
        {{LayerSpec::conv(2, 3, 3), LayerSpec::maxpool2(), LayerSpec::dense(3)}, {1, 6, 6}},
        {{LayerSpec::conv(2, 2, 2), LayerSpec::relu(), LayerSpec::global_avg_pool(),
          LayerSpec::dense(4)},
         {1, 5, 5}},
        {{LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(2)}, {4, 1, 1}},
        {{LayerSpec::maxpool2(), LayerSpec::conv(2, 2, 2), LayerSpec::relu(),
          LayerSpec::global_avg_pool(), LayerSpec::dense(3)},
         {1, 8, 8}},
        {{LayerSpec::conv(3, 3, 3), LayerSpec::relu(), LayerSpec::maxpool2(),
          LayerSpec::conv(2, 2, 2), LayerSpec::global_avg_pool(), LayerSpec::dense(3)},
         {2, 6, 6}},
    };
    SplitMix64 rng(86);
    for (size_t i = 0; i < configs.size(); ++i) {
        CnnNet<double> net = make_net(configs[i].arch, configs[i].input);
        for (int draw = 0; draw < 2; ++draw) {
            randomize_net(net, rng);
            const Tensor<double> x = random_tensor(
                rng, configs[i].input.ch, configs[i].input.h, configs[i].input.w);
            const int n_out = shape_chain(configs[i].arch, configs[i].input).back().volume();
            const int label = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_out)));
            CHECK(gradients_match(net, x, label, 5e-4, 1e-4, 2e-7));
        }
    }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    CnnModel model;
    model.net.arch = {LayerSpec::conv(2, 3, 3), LayerSpec::relu(),
                      LayerSpec::global_avg_pool(), LayerSpec::dense(2)};
    model.net.input_shape = {1, 8, 8};
    model.net.build();
    model.net.init_parameters(3);
    model.config.epochs = 3;
    model.config.batch_size = 4;
    model.config.learning_rate = 0.0;
    const auto before = model.net.params;

    SplitMix64 rng(87);
    std::vector<Tensor<float>> X;
    std::vector<int> y;
    for (int i = 0; i < 8; ++i) {
        Tensor<float> t(1, 8, 8);
        for (auto& v : t.v) v = static_cast<float>(rng.next_double());
        X.push_back(std::move(t));
        y.push_back(i % 2);
    }
    train_cnn(model, X, y, {}, {});
    for (size_t l = 0; l < before.size(); ++l) {
        CHECK(model.net.params[l].weights == before[l].weights);
        CHECK(model.net.params[l].biases == before[l].biases);
    }
}

TEST_CASE("bright-left vs bright-right toy set trains to accuracy 1.0") {
    // 20 samples, 30 epochs, small net over the same layer kit. The dense
    // layer sees pooled positions directly, so the sides separate fast.
    CnnModel model;
    model.net.arch = {LayerSpec::conv(4, 3, 3), LayerSpec::relu(), LayerSpec::maxpool2(),
                      LayerSpec::dense(2)};
    model.net.input_shape = {1, 16, 16};
    model.net.build();
    model.net.init_parameters(0);
    model.config.epochs = 30;
    model.config.batch_size = 8;
    model.config.seed = 0;

    SplitMix64 rng(88);
    std::vector<Tensor<float>> X;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        const int label = i % 2;
        Tensor<float> t(1, 16, 16);
        for (int yy = 0; yy < 16; ++yy)
            for (int xx = 0; xx < 16; ++xx) {
                const bool bright = label == 0 ? xx < 8 : xx >= 8;
                t.at(0, yy, xx) =
                    static_cast<float>((bright ? 0.8 : 0.1) + 0.05 * rng.next_double());
            }
        X.push_back(std::move(t));
        y.push_back(label);
    }
    const TrainingHistory h = train_cnn(model, X, y, {}, {});
    REQUIRE(h.train_accuracy.size() == 30);
    CHECK(h.train_accuracy.back() == doctest::Approx(1.0));
    int correct = 0;
    for (size_t i = 0; i < X.size(); ++i)
        if (cnn_predict(model, X[i]).predicted == y[i]) correct++;
    CHECK(correct == 20);
}

TEST_CASE("training history is bit-identical across reruns") {
    const auto run_once = [] {
        CnnModel model;
        model.net.arch = {LayerSpec::conv(2, 3, 3), LayerSpec::relu(),
                          LayerSpec::global_avg_pool(), LayerSpec::dense(2)};
        model.net.input_shape = {1, 8, 8};
        model.net.build();
        model.net.init_parameters(11);
        model.config.epochs = 5;
        model.config.batch_size = 4;
        model.config.seed = 11;
        SplitMix64 rng(89);
        std::vector<Tensor<float>> X;
        std::vector<int> y;
        for (int i = 0; i < 10; ++i) {
            Tensor<float> t(1, 8, 8);
            for (auto& v : t.v) v = static_cast<float>(rng.next_double());
            X.push_back(std::move(t));
            y.push_back(i % 2);
        }
        std::vector<Tensor<float>> Xv(X.begin(), X.begin() + 2);
        std::vector<int> yv(y.begin(), y.begin() + 2);
        return train_cnn(model, X, y, Xv, yv);
    };
    const TrainingHistory a = run_once();
    const TrainingHistory b = run_once();
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.train_accuracy == b.train_accuracy);
    CHECK(a.val_loss == b.val_loss);
    CHECK(a.val_accuracy == b.val_accuracy);
}

TEST_CASE("empty training set raises ArgumentError") {
    CnnModel model;
    model.net.arch = {LayerSpec::dense(2)};
    model.net.input_shape = {4, 1, 1};
    model.net.build();
    CHECK_THROWS_AS(train_cnn(model, {}, {}, {}, {}), ArgumentError);
}

TEST_CASE("softmax properties of cnn_predict") {
    SplitMix64 rng(90);
    CnnModel model;
    model.net.arch = {LayerSpec::conv(2, 3, 3), LayerSpec::relu(), LayerSpec::global_avg_pool(),
                      LayerSpec::dense(4)};
    model.net.input_shape = {1, 8, 8};
    model.net.build();
    for (int trial = 0; trial < 10; ++trial) {
        model.net.init_parameters(rng.next());
        Tensor<float> x(1, 8, 8);
        for (auto& v : x.v) v = static_cast<float>(rng.next_gaussian());
        const Tensor<float> logits = model.net.forward(x);
        const CnnPrediction pred = cnn_predict(model, x);
        double total = 0.0;
        for (double p : pred.probabilities) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        int logit_argmax = 0;
        for (size_t c = 1; c < logits.v.size(); ++c)
            if (logits.v[c] > logits.v[static_cast<size_t>(logit_argmax)])
                logit_argmax = static_cast<int>(c);
        CHECK(pred.predicted == logit_argmax);
    }
}

TEST_CASE("identical batch rows give identical logits") {
    CnnNet<double> net = make_net({LayerSpec::conv(2, 3, 3), LayerSpec::relu(),
                                   LayerSpec::global_avg_pool(), LayerSpec::dense(3)},
                                  {1, 6, 6});
    SplitMix64 rng(91);
    randomize_net(net, rng);
    const Tensor<double> x = random_tensor(rng, 1, 6, 6);
    const Tensor<double> a = net.forward(x);
    const Tensor<double> b = net.forward(x);
    CHECK(a.v == b.v);
}

TEST_CASE("translation smoke check") {
    CnnModel model;
    model.net.arch = standard_architecture();
    model.net.input_shape = {1, 32, 32};
    model.net.build();
    model.net.init_parameters(7);
    SplitMix64 rng(92);
    Tensor<float> x(1, 32, 32);
    for (auto& v : x.v) v = static_cast<float>(rng.next_double());
    Tensor<float> shifted(1, 32, 32);
    for (int y = 0; y < 32; ++y)
        for (int xx = 1; xx < 32; ++xx) shifted.at(0, y, xx) = x.at(0, y, xx - 1);

    const Tensor<float> la = model.net.forward(x);
    const Tensor<float> lb = model.net.forward(shifted);
    double delta_logit = 0.0;
    for (size_t c = 0; c < la.v.size(); ++c)
        delta_logit = std::max(delta_logit,
                               std::abs(static_cast<double>(la.v[c]) - lb.v[c]));
    double delta_input = 0.0;
    for (size_t j = 0; j < x.v.size(); ++j) {
        const double d = static_cast<double>(x.v[j]) - shifted.v[j];
        delta_input += d * d;
    }
    delta_input = std::sqrt(delta_input);
    CHECK(std::isfinite(delta_logit));
    CHECK(delta_logit <= 100.0 * delta_input + 1e-6);
}

}  // TEST_SUITE
