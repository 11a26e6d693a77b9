#include "demgrade/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "demgrade/parallel.hpp"
#include "demgrade/rng.hpp"

namespace demgrade {

CnnArchitecture standard_architecture() {
    return {
        LayerSpec::conv(64, 5, 5),  LayerSpec::relu(), LayerSpec::maxpool2(),
        LayerSpec::conv(128, 3, 3), LayerSpec::relu(), LayerSpec::maxpool2(),
        LayerSpec::conv(128, 2, 2), LayerSpec::relu(), LayerSpec::global_avg_pool(),
        LayerSpec::dense(4),
    };
}

std::vector<ShapeInfo> shape_chain(const CnnArchitecture& arch, ShapeInfo input) {
    if (input.ch < 1 || input.h < 1 || input.w < 1)
        throw ShapeError("input shape must be positive");
    std::vector<ShapeInfo> shapes{input};
    ShapeInfo s = input;
    for (size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& layer = arch[i];
        switch (layer.kind) {
            case LayerSpec::Kind::conv:
                if (layer.out_channels < 1 || layer.kernel_h < 1 || layer.kernel_w < 1)
                    throw ShapeError("conv layer has invalid configuration");
                if (layer.kernel_h > s.h || layer.kernel_w > s.w)
                    throw ShapeError("conv kernel larger than its input at layer " +
                                     std::to_string(i));
                s = {layer.out_channels, s.h - layer.kernel_h + 1, s.w - layer.kernel_w + 1};
                break;
            case LayerSpec::Kind::relu:
                break;
            case LayerSpec::Kind::maxpool2:
                if (s.h % 2 != 0 || s.w % 2 != 0)
                    throw ShapeError("maxpool2 requires even spatial dims at layer " +
                                     std::to_string(i));
                s = {s.ch, s.h / 2, s.w / 2};
                break;
            case LayerSpec::Kind::global_avg_pool:
                s = {s.ch, 1, 1};
                break;
            case LayerSpec::Kind::dense:
                if (layer.out_features < 1) throw ShapeError("dense layer needs out_features >= 1");
                s = {layer.out_features, 1, 1};
                break;
        }
        shapes.push_back(s);
    }
    return shapes;
}

std::vector<size_t> param_count(const CnnArchitecture& arch, ShapeInfo input) {
    const auto shapes = shape_chain(arch, input);
    std::vector<size_t> counts(arch.size(), 0);
    for (size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& layer = arch[i];
        const ShapeInfo& in = shapes[i];
        if (layer.kind == LayerSpec::Kind::conv)
            counts[i] = (static_cast<size_t>(layer.kernel_h) * layer.kernel_w * in.ch + 1) *
                        static_cast<size_t>(layer.out_channels);
        else if (layer.kind == LayerSpec::Kind::dense)
            counts[i] = (static_cast<size_t>(in.volume()) + 1) *
                        static_cast<size_t>(layer.out_features);
    }
    return counts;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, std::span<const T> weights, std::span<const T> biases,
                 int out_channels, int kernel_h, int kernel_w) {
    if (kernel_h > input.h || kernel_w > input.w)
        throw ShapeError("conv2d: kernel larger than input");
    const int oh = input.h - kernel_h + 1;
    const int ow = input.w - kernel_w + 1;
    const size_t expected_w = static_cast<size_t>(out_channels) * input.ch * kernel_h * kernel_w;
    if (weights.size() != expected_w || biases.size() != static_cast<size_t>(out_channels))
        throw ShapeError("conv2d: parameter buffers have wrong size");

    Tensor<T> out(out_channels, oh, ow);
    for (int o = 0; o < out_channels; ++o) {
        T* out_plane = out.v.data() + static_cast<size_t>(o) * oh * ow;
        for (int i = 0; i < oh * ow; ++i) out_plane[i] = biases[static_cast<size_t>(o)];
        for (int c = 0; c < input.ch; ++c) {
            const T* in_plane = input.v.data() + static_cast<size_t>(c) * input.h * input.w;
            for (int u = 0; u < kernel_h; ++u) {
                for (int v = 0; v < kernel_w; ++v) {
                    const T wv = weights[((static_cast<size_t>(o) * input.ch + c) * kernel_h + u) *
                                             static_cast<size_t>(kernel_w) +
                                         v];
                    for (int y = 0; y < oh; ++y) {
                        const T* in_row = in_plane + static_cast<size_t>(y + u) * input.w + v;
                        T* out_row = out_plane + static_cast<size_t>(y) * ow;
                        for (int x = 0; x < ow; ++x) out_row[x] += wv * in_row[x];
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
std::pair<Tensor<T>, std::vector<int32_t>> maxpool2(const Tensor<T>& input) {
    if (input.h % 2 != 0 || input.w % 2 != 0)
        throw ShapeError("maxpool2: spatial dims must be even");
    const int oh = input.h / 2;
    const int ow = input.w / 2;
    Tensor<T> out(input.ch, oh, ow);
    std::vector<int32_t> argmax(out.size());
    for (int c = 0; c < input.ch; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                T best = -std::numeric_limits<T>::infinity();
                int32_t best_index = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int iy = 2 * y + dy;
                        const int ix = 2 * x + dx;
                        const size_t idx =
                            (static_cast<size_t>(c) * input.h + iy) * static_cast<size_t>(input.w) +
                            ix;
                        if (input.v[idx] > best) {  // strict: ties keep the first
                            best = input.v[idx];
                            best_index = static_cast<int32_t>(idx);
                        }
                    }
                }
                out.at(c, y, x) = best;
                argmax[(static_cast<size_t>(c) * oh + y) * static_cast<size_t>(ow) + x] = best_index;
            }
        }
    }
    return {std::move(out), std::move(argmax)};
}

template <typename T>
void CnnNet<T>::build() {
    const auto shapes = shape_chain(arch, input_shape);
    params.assign(arch.size(), LayerParams<T>{});
    for (size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& layer = arch[i];
        const ShapeInfo& in = shapes[i];
        if (layer.kind == LayerSpec::Kind::conv) {
            params[i].weights.assign(static_cast<size_t>(layer.out_channels) * in.ch *
                                         layer.kernel_h * layer.kernel_w,
                                     T(0));
            params[i].biases.assign(static_cast<size_t>(layer.out_channels), T(0));
        } else if (layer.kind == LayerSpec::Kind::dense) {
            params[i].weights.assign(static_cast<size_t>(layer.out_features) * in.volume(), T(0));
            params[i].biases.assign(static_cast<size_t>(layer.out_features), T(0));
        }
    }
}

template <typename T>
void CnnNet<T>::init_parameters(uint64_t seed) {
    if (params.size() != arch.size()) build();
    const auto shapes = shape_chain(arch, input_shape);
    const uint64_t init_stream = derive_seed(seed, 1);
    for (size_t i = 0; i < arch.size(); ++i) {
        if (params[i].weights.empty()) continue;
        const LayerSpec& layer = arch[i];
        const ShapeInfo& in = shapes[i];
        const size_t fan_in = layer.kind == LayerSpec::Kind::conv
                                  ? static_cast<size_t>(in.ch) * layer.kernel_h * layer.kernel_w
                                  : static_cast<size_t>(in.volume());
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        SplitMix64 rng(derive_seed(init_stream, i));
        for (T& w : params[i].weights) w = static_cast<T>(stddev * rng.next_gaussian());
        std::fill(params[i].biases.begin(), params[i].biases.end(), T(0));
    }
}

template <typename T>
size_t CnnNet<T>::total_parameters() const {
    size_t total = 0;
    for (const auto& p : params) total += p.weights.size() + p.biases.size();
    return total;
}

template <typename T>
Tensor<T> CnnNet<T>::forward(const Tensor<T>& x, ForwardCache<T>* cache) const {
    if (x.shape() != input_shape) throw ShapeError("forward: input shape mismatch");
    if (cache) {
        cache->activations.clear();
        cache->pool_argmax.assign(arch.size(), {});
    }
    Tensor<T> current = x;
    for (size_t i = 0; i < arch.size(); ++i) {
        if (cache) cache->activations.push_back(current);
        const LayerSpec& layer = arch[i];
        switch (layer.kind) {
            case LayerSpec::Kind::conv:
                current = conv2d<T>(current, params[i].weights, params[i].biases,
                                    layer.out_channels, layer.kernel_h, layer.kernel_w);
                break;
            case LayerSpec::Kind::relu: {
                for (T& v : current.v)
                    if (v < T(0)) v = T(0);
                break;
            }
            case LayerSpec::Kind::maxpool2: {
                auto [pooled, argmax] = maxpool2<T>(current);
                current = std::move(pooled);
                if (cache) cache->pool_argmax[i] = std::move(argmax);
                break;
            }
            case LayerSpec::Kind::global_avg_pool: {
                Tensor<T> pooled(current.ch, 1, 1);
                const T inv = T(1) / static_cast<T>(current.h * current.w);
                for (int c = 0; c < current.ch; ++c) {
                    T sum = T(0);
                    const T* plane = current.v.data() + static_cast<size_t>(c) * current.h * current.w;
                    for (int j = 0; j < current.h * current.w; ++j) sum += plane[j];
                    pooled.v[static_cast<size_t>(c)] = sum * inv;
                }
                current = std::move(pooled);
                break;
            }
            case LayerSpec::Kind::dense: {
                const int in_features = current.shape().volume();
                Tensor<T> out(layer.out_features, 1, 1);
                for (int j = 0; j < layer.out_features; ++j) {
                    T acc = params[i].biases[static_cast<size_t>(j)];
                    const T* wrow =
                        params[i].weights.data() + static_cast<size_t>(j) * in_features;
                    for (int k = 0; k < in_features; ++k) acc += wrow[k] * current.v[static_cast<size_t>(k)];
                    out.v[static_cast<size_t>(j)] = acc;
                }
                current = std::move(out);
                break;
            }
        }
    }
    if (cache) cache->activations.push_back(current);
    return current;
}

template <typename T>
void CnnNet<T>::backward(const ForwardCache<T>& cache, const Tensor<T>& dlogits,
                         std::vector<LayerParams<T>>& grads, Tensor<T>* d_input) const {
    if (cache.activations.size() != arch.size() + 1)
        throw ArgumentError("backward: cache does not match architecture");
    Tensor<T> delta = dlogits;
    for (size_t ri = arch.size(); ri-- > 0;) {
        const LayerSpec& layer = arch[ri];
        const Tensor<T>& in = cache.activations[ri];
        Tensor<T> d_in;
        switch (layer.kind) {
            case LayerSpec::Kind::conv: {
                const int kh = layer.kernel_h;
                const int kw = layer.kernel_w;
                const int oh = delta.h;
                const int ow = delta.w;
                d_in = Tensor<T>(in.ch, in.h, in.w);
                auto& g = grads[ri];
                for (int o = 0; o < layer.out_channels; ++o) {
                    const T* d_plane = delta.v.data() + static_cast<size_t>(o) * oh * ow;
                    T db = T(0);
                    for (int j = 0; j < oh * ow; ++j) db += d_plane[j];
                    g.biases[static_cast<size_t>(o)] += db;
                    for (int c = 0; c < in.ch; ++c) {
                        const T* in_plane = in.v.data() + static_cast<size_t>(c) * in.h * in.w;
                        T* din_plane = d_in.v.data() + static_cast<size_t>(c) * in.h * in.w;
                        for (int u = 0; u < kh; ++u) {
                            for (int v = 0; v < kw; ++v) {
                                const size_t widx =
                                    ((static_cast<size_t>(o) * in.ch + c) * kh + u) *
                                        static_cast<size_t>(kw) +
                                    v;
                                const T wv = params[ri].weights[widx];
                                T dw = T(0);
                                for (int y = 0; y < oh; ++y) {
                                    const T* in_row =
                                        in_plane + static_cast<size_t>(y + u) * in.w + v;
                                    T* din_row =
                                        din_plane + static_cast<size_t>(y + u) * in.w + v;
                                    const T* d_row = d_plane + static_cast<size_t>(y) * ow;
                                    for (int x = 0; x < ow; ++x) {
                                        dw += d_row[x] * in_row[x];
                                        din_row[x] += wv * d_row[x];
                                    }
                                }
                                g.weights[widx] += dw;
                            }
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::relu: {
                d_in = delta;
                for (size_t j = 0; j < d_in.v.size(); ++j)
                    if (in.v[j] <= T(0)) d_in.v[j] = T(0);
                break;
            }
            case LayerSpec::Kind::maxpool2: {
                d_in = Tensor<T>(in.ch, in.h, in.w);
                const auto& argmax = cache.pool_argmax[ri];
                for (size_t j = 0; j < delta.v.size(); ++j)
                    d_in.v[static_cast<size_t>(argmax[j])] += delta.v[j];
                break;
            }
            case LayerSpec::Kind::global_avg_pool: {
                d_in = Tensor<T>(in.ch, in.h, in.w);
                const T inv = T(1) / static_cast<T>(in.h * in.w);
                for (int c = 0; c < in.ch; ++c) {
                    const T dv = delta.v[static_cast<size_t>(c)] * inv;
                    T* plane = d_in.v.data() + static_cast<size_t>(c) * in.h * in.w;
                    for (int j = 0; j < in.h * in.w; ++j) plane[j] = dv;
                }
                break;
            }
            case LayerSpec::Kind::dense: {
                const int in_features = in.shape().volume();
                d_in = Tensor<T>(in.ch, in.h, in.w);
                auto& g = grads[ri];
                for (int j = 0; j < layer.out_features; ++j) {
                    const T dj = delta.v[static_cast<size_t>(j)];
                    g.biases[static_cast<size_t>(j)] += dj;
                    const T* wrow =
                        params[ri].weights.data() + static_cast<size_t>(j) * in_features;
                    T* grow = g.weights.data() + static_cast<size_t>(j) * in_features;
                    for (int k = 0; k < in_features; ++k) {
                        grow[k] += dj * in.v[static_cast<size_t>(k)];
                        d_in.v[static_cast<size_t>(k)] += dj * wrow[k];
                    }
                }
                break;
            }
        }
        delta = std::move(d_in);
    }
    if (d_input) *d_input = std::move(delta);
}

template <typename T>
template <typename U>
CnnNet<U> CnnNet<T>::cast() const {
    CnnNet<U> out;
    out.arch = arch;
    out.input_shape = input_shape;
    out.params.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        out.params[i].weights.assign(params[i].weights.begin(), params[i].weights.end());
        out.params[i].biases.assign(params[i].biases.begin(), params[i].biases.end());
    }
    return out;
}

template <typename T>
std::vector<LayerParams<T>> zero_like_params(const CnnNet<T>& net) {
    std::vector<LayerParams<T>> out(net.params.size());
    for (size_t i = 0; i < net.params.size(); ++i) {
        out[i].weights.assign(net.params[i].weights.size(), T(0));
        out[i].biases.assign(net.params[i].biases.size(), T(0));
    }
    return out;
}

template <typename T>
std::vector<double> softmax(std::span<const T> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (T v : logits) max_logit = std::max(max_logit, static_cast<double>(v));
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

template <typename T>
double loss_and_grads(const CnnNet<T>& net, std::span<const Tensor<T>> batch,
                      std::span<const int> labels, std::vector<LayerParams<T>>& grads,
                      std::vector<int>* predictions) {
    if (batch.size() != labels.size())
        throw ArgumentError("loss_and_grads: batch and label counts differ");
    if (batch.empty()) throw ArgumentError("loss_and_grads: empty batch");
    const auto shapes = shape_chain(net.arch, net.input_shape);
    const int n_out = shapes.back().volume();
    for (int label : labels)
        if (label < 0 || label >= n_out)
            throw ArgumentError("loss_and_grads: label out of range");

    const size_t n = batch.size();
    std::vector<double> losses(n, 0.0);
    std::vector<int> preds(n, 0);
    std::vector<std::vector<LayerParams<T>>> sample_grads(n);

    parallel_for(n, [&](size_t s) {
        ForwardCache<T> cache;
        const Tensor<T> logits = net.forward(batch[s], &cache);
        const std::vector<double> p = softmax<T>(logits.v);
        const int label = labels[s];
        losses[s] = -std::log(std::max(p[static_cast<size_t>(label)], 1e-300));
        int arg = 0;
        for (size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[static_cast<size_t>(arg)]) arg = static_cast<int>(c);
        preds[s] = arg;

        Tensor<T> dlogits(logits.ch, logits.h, logits.w);
        for (size_t c = 0; c < p.size(); ++c)
            dlogits.v[c] = static_cast<T>(p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
        sample_grads[s] = zero_like_params(net);
        net.backward(cache, dlogits, sample_grads[s]);
    });

    // Serial reduction in sample order keeps results thread-count invariant.
    grads = zero_like_params(net);
    const T inv_n = T(1) / static_cast<T>(n);
    for (size_t s = 0; s < n; ++s) {
        for (size_t l = 0; l < grads.size(); ++l) {
            for (size_t j = 0; j < grads[l].weights.size(); ++j)
                grads[l].weights[j] += sample_grads[s][l].weights[j] * inv_n;
            for (size_t j = 0; j < grads[l].biases.size(); ++j)
                grads[l].biases[j] += sample_grads[s][l].biases[j] * inv_n;
        }
    }
    double loss = 0.0;
    for (size_t s = 0; s < n; ++s) loss += losses[s];
    if (predictions) *predictions = std::move(preds);
    return loss / static_cast<double>(n);
}

namespace {

struct AdamState {
    std::vector<LayerParams<float>> m;
    std::vector<LayerParams<float>> v;
    int64_t t = 0;
};

void adam_step(CnnNet<float>& net, const std::vector<LayerParams<float>>& grads, AdamState& state,
               const CnnConfig& cfg) {
    state.t++;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    auto update = [&](std::vector<float>& p, const std::vector<float>& g, std::vector<float>& m,
                      std::vector<float>& v) {
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = static_cast<float>(cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j]);
            v[j] = static_cast<float>(cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j]);
            const double m_hat = m[j] / bias1;
            const double v_hat = v[j] / bias2;
            p[j] -= static_cast<float>(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps));
        }
    };
    for (size_t l = 0; l < net.params.size(); ++l) {
        update(net.params[l].weights, grads[l].weights, state.m[l].weights, state.v[l].weights);
        update(net.params[l].biases, grads[l].biases, state.m[l].biases, state.v[l].biases);
    }
}

}  // namespace

TrainingHistory train_cnn(CnnModel& model, const std::vector<Tensor<float>>& X,
                          const std::vector<int>& y, const std::vector<Tensor<float>>& X_val,
                          const std::vector<int>& y_val) {
    if (X.empty()) throw ArgumentError("train_cnn: empty training set");
    if (X.size() != y.size()) throw ArgumentError("train_cnn: X and y sizes differ");
    if (X_val.size() != y_val.size()) throw ArgumentError("train_cnn: X_val and y_val sizes differ");
    const CnnConfig& cfg = model.config;
    if (cfg.batch_size < 1) throw ArgumentError("train_cnn: batch_size must be >= 1");

    AdamState state;
    state.m = zero_like_params(model.net);
    state.v = zero_like_params(model.net);

    const uint64_t shuffle_stream = derive_seed(cfg.seed, 2);
    std::vector<size_t> order(X.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainingHistory history;
    std::vector<Tensor<float>> batch;
    std::vector<int> batch_labels;
    std::vector<LayerParams<float>> grads;
    std::vector<int> preds;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 rng(derive_seed(shuffle_stream, static_cast<uint64_t>(epoch)));
        shuffle(order, rng);

        double epoch_loss = 0.0;
        size_t correct = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            batch.clear();
            batch_labels.clear();
            for (size_t i = start; i < end; ++i) {
                batch.push_back(X[order[i]]);
                batch_labels.push_back(y[order[i]]);
            }
            const double loss = loss_and_grads<float>(model.net, batch, batch_labels, grads, &preds);
            epoch_loss += loss * static_cast<double>(batch.size());
            for (size_t i = 0; i < preds.size(); ++i)
                if (preds[i] == batch_labels[i]) correct++;
            adam_step(model.net, grads, state, cfg);
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(X.size()));
        history.train_accuracy.push_back(static_cast<double>(correct) /
                                         static_cast<double>(X.size()));

        if (!X_val.empty()) {
            const auto [vloss, vacc] = evaluate_cnn(model.net, X_val, y_val);
            history.val_loss.push_back(vloss);
            history.val_accuracy.push_back(vacc);
        } else {
            history.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
            history.val_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return history;
}

CnnPrediction cnn_predict(const CnnModel& model, const Tensor<float>& x) {
    const Tensor<float> logits = model.net.forward(x);
    CnnPrediction out;
    out.probabilities = softmax<float>(logits.v);
    for (size_t c = 1; c < out.probabilities.size(); ++c)
        if (out.probabilities[c] > out.probabilities[static_cast<size_t>(out.predicted)])
            out.predicted = static_cast<int>(c);
    return out;
}

std::pair<double, double> evaluate_cnn(const CnnNet<float>& net,
                                       const std::vector<Tensor<float>>& X,
                                       const std::vector<int>& y) {
    if (X.empty()) throw ArgumentError("evaluate_cnn: empty set");
    std::vector<double> losses(X.size());
    std::vector<uint8_t> hits(X.size());
    parallel_for(X.size(), [&](size_t i) {
        const Tensor<float> logits = net.forward(X[i]);
        const auto p = softmax<float>(logits.v);
        losses[i] = -std::log(std::max(p[static_cast<size_t>(y[i])], 1e-300));
        int arg = 0;
        for (size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[static_cast<size_t>(arg)]) arg = static_cast<int>(c);
        hits[i] = arg == y[i] ? 1 : 0;
    });
    double loss = 0.0;
    size_t correct = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        loss += losses[i];
        correct += hits[i];
    }
    return {loss / static_cast<double>(X.size()),
            static_cast<double>(correct) / static_cast<double>(X.size())};
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct CnnNet<float>;
template struct CnnNet<double>;
template CnnNet<double> CnnNet<float>::cast<double>() const;
template CnnNet<float> CnnNet<double>::cast<float>() const;

template Tensor<float> conv2d<float>(const Tensor<float>&, std::span<const float>,
                                     std::span<const float>, int, int, int);
template Tensor<double> conv2d<double>(const Tensor<double>&, std::span<const double>,
                                       std::span<const double>, int, int, int);
template std::pair<Tensor<float>, std::vector<int32_t>> maxpool2<float>(const Tensor<float>&);
template std::pair<Tensor<double>, std::vector<int32_t>> maxpool2<double>(const Tensor<double>&);
template std::vector<LayerParams<float>> zero_like_params<float>(const CnnNet<float>&);
template std::vector<LayerParams<double>> zero_like_params<double>(const CnnNet<double>&);
template std::vector<double> softmax<float>(std::span<const float>);
template std::vector<double> softmax<double>(std::span<const double>);
template double loss_and_grads<float>(const CnnNet<float>&, std::span<const Tensor<float>>,
                                      std::span<const int>, std::vector<LayerParams<float>>&,
                                      std::vector<int>*);
template double loss_and_grads<double>(const CnnNet<double>&, std::span<const Tensor<double>>,
                                       std::span<const int>, std::vector<LayerParams<double>>&,
                                       std::vector<int>*);

}  // namespace demgrade
