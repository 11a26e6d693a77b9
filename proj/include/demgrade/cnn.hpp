#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "demgrade/errors.hpp"

namespace demgrade {

struct ShapeInfo {
    int ch = 0;
    int h = 0;
    int w = 0;

    int volume() const { return ch * h * w; }
    bool operator==(const ShapeInfo&) const = default;
};

// Channel-major dense tensor; a flat feature vector is (n, 1, 1).
template <typename T>
struct Tensor {
    int ch = 0;
    int h = 0;
    int w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c, int hh, int ww)
        : ch(c), h(hh), w(ww),
          v(static_cast<size_t>(c) * static_cast<size_t>(hh) * static_cast<size_t>(ww), T(0)) {}

    T at(int c, int y, int x) const {
        return v[(static_cast<size_t>(c) * h + y) * static_cast<size_t>(w) + x];
    }
    T& at(int c, int y, int x) {
        return v[(static_cast<size_t>(c) * h + y) * static_cast<size_t>(w) + x];
    }
    size_t size() const { return v.size(); }
    ShapeInfo shape() const { return {ch, h, w}; }
};

struct LayerSpec {
    enum class Kind { conv, relu, maxpool2, global_avg_pool, dense };
    Kind kind = Kind::relu;
    int out_channels = 0;  // conv
    int kernel_h = 0;
    int kernel_w = 0;
    int out_features = 0;  // dense

    static LayerSpec conv(int out_ch, int kh, int kw) {
        return {Kind::conv, out_ch, kh, kw, 0};
    }
    static LayerSpec relu() { return {Kind::relu, 0, 0, 0, 0}; }
    static LayerSpec maxpool2() { return {Kind::maxpool2, 0, 0, 0, 0}; }
    static LayerSpec global_avg_pool() { return {Kind::global_avg_pool, 0, 0, 0, 0}; }
    static LayerSpec dense(int out) { return {Kind::dense, 0, 0, 0, out}; }

    bool operator==(const LayerSpec&) const = default;
};

using CnnArchitecture = std::vector<LayerSpec>;

// Conv(64,5x5) -> ReLU -> MaxPool -> Conv(128,3x3) -> ReLU -> MaxPool ->
// Conv(128,2x2) -> ReLU -> GlobalAveragePool -> Dense(4), for (1,32,32) input.
CnnArchitecture standard_architecture();

// Input shape followed by each layer's output shape; throws ShapeError if the
// chain does not check out (kernel larger than input, odd dims into maxpool).
std::vector<ShapeInfo> shape_chain(const CnnArchitecture& arch, ShapeInfo input);

// Trainable parameters per layer: conv (kh*kw*c_in + 1)*c_out, dense
// (in + 1)*out, 0 for the rest.
std::vector<size_t> param_count(const CnnArchitecture& arch, ShapeInfo input);

template <typename T>
struct LayerParams {
    std::vector<T> weights;
    std::vector<T> biases;
};

// Standalone conv, valid padding, stride 1. weights[o][c][u][v] row-major.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, std::span<const T> weights, std::span<const T> biases,
                 int out_channels, int kernel_h, int kernel_w);

// 2x2/stride-2 max per channel; argmax (flat input index, ties to the first
// in row-major order) recorded for backward.
template <typename T>
std::pair<Tensor<T>, std::vector<int32_t>> maxpool2(const Tensor<T>& input);

template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> activations;          // input of each layer + final output
    std::vector<std::vector<int32_t>> pool_argmax;  // per layer; empty unless maxpool
};

template <typename T>
struct CnnNet {
    CnnArchitecture arch;
    ShapeInfo input_shape{1, 32, 32};
    std::vector<LayerParams<T>> params;

    // Validates the shape chain and sizes all parameter buffers (zeroed).
    void build();
    // He-normal weights, zero biases, deterministic per (seed, layer).
    void init_parameters(uint64_t seed);
    size_t total_parameters() const;

    Tensor<T> forward(const Tensor<T>& x, ForwardCache<T>* cache = nullptr) const;
    // Backpropagates dlogits through the cached forward pass, accumulating
    // parameter gradients; d_input is filled when non-null.
    void backward(const ForwardCache<T>& cache, const Tensor<T>& dlogits,
                  std::vector<LayerParams<T>>& grads, Tensor<T>* d_input = nullptr) const;

    template <typename U>
    CnnNet<U> cast() const;
};

template <typename T>
std::vector<LayerParams<T>> zero_like_params(const CnnNet<T>& net);

template <typename T>
std::vector<double> softmax(std::span<const T> logits);

// Mean cross-entropy over the batch plus mean gradients; gradients are
// accumulated per sample in index order so results are reproducible under
// any thread count. predictions, when non-null, receives each sample's
// argmax class.
template <typename T>
double loss_and_grads(const CnnNet<T>& net, std::span<const Tensor<T>> batch,
                      std::span<const int> labels, std::vector<LayerParams<T>>& grads,
                      std::vector<int>* predictions = nullptr);

struct CnnConfig {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;

    bool operator==(const CnnConfig&) const = default;
};

struct CnnModel {
    CnnNet<float> net;
    CnnConfig config;
};

struct TrainingHistory {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_loss;      // NaN entries when no validation set
    std::vector<double> val_accuracy;
};

// Mini-batch Adam over seeded per-epoch shuffles. Deterministic for a fixed
// seed; the validation set may be empty.
TrainingHistory train_cnn(CnnModel& model, const std::vector<Tensor<float>>& X,
                          const std::vector<int>& y, const std::vector<Tensor<float>>& X_val,
                          const std::vector<int>& y_val);

struct CnnPrediction {
    int predicted = 0;
    std::vector<double> probabilities;
};

CnnPrediction cnn_predict(const CnnModel& model, const Tensor<float>& x);

// Mean loss / accuracy of a fitted net on a labeled set.
std::pair<double, double> evaluate_cnn(const CnnNet<float>& net,
                                       const std::vector<Tensor<float>>& X,
                                       const std::vector<int>& y);

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template struct CnnNet<float>;
extern template struct CnnNet<double>;

}  // namespace demgrade
