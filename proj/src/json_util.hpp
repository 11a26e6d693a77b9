#pragma once

#include <json.hpp>

#include "demgrade/cnn.hpp"
#include "demgrade/rf.hpp"
#include "demgrade/svm.hpp"
#include "demgrade/watershed.hpp"

// JSON converters shared by model persistence and config parsing.
namespace demgrade::jsonutil {

using nlohmann::json;

inline json to_json(const WatershedParams& p) {
    return {{"open_iterations", p.open_iterations},
            {"dilate_iterations", p.dilate_iterations},
            {"fg_ratio", p.fg_ratio},
            {"element_size", p.element_size},
            {"component_connectivity", p.component_connectivity},
            {"flood_connectivity", p.flood_connectivity},
            {"invert_threshold", p.invert_threshold}};
}

inline WatershedParams watershed_params_from(const json& j) {
    WatershedParams p;
    p.open_iterations = j.value("open_iterations", p.open_iterations);
    p.dilate_iterations = j.value("dilate_iterations", p.dilate_iterations);
    p.fg_ratio = j.value("fg_ratio", p.fg_ratio);
    p.element_size = j.value("element_size", p.element_size);
    p.component_connectivity = j.value("component_connectivity", p.component_connectivity);
    p.flood_connectivity = j.value("flood_connectivity", p.flood_connectivity);
    p.invert_threshold = j.value("invert_threshold", p.invert_threshold);
    return p;
}

inline json to_json(const RfConfig& c) {
    return {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"features_per_split", c.features_per_split},
            {"seed", c.seed}};
}

inline RfConfig rf_config_from(const json& j) {
    RfConfig c;
    c.n_trees = j.value("n_trees", c.n_trees);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.features_per_split = j.value("features_per_split", c.features_per_split);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline json to_json(const KernelParams& p) {
    return {{"degree", p.degree},
            {"gamma", p.gamma},
            {"coef0", p.coef0},
            {"C", p.C},
            {"tol", p.tol}};
}

inline KernelParams kernel_params_from(const json& j) {
    KernelParams p;
    p.degree = j.value("degree", p.degree);
    p.gamma = j.value("gamma", p.gamma);
    p.coef0 = j.value("coef0", p.coef0);
    p.C = j.value("C", p.C);
    p.tol = j.value("tol", p.tol);
    return p;
}

inline json to_json(const CnnConfig& c) {
    return {{"epochs", c.epochs},      {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
            {"beta2", c.beta2},        {"eps", c.eps},
            {"seed", c.seed}};
}

inline CnnConfig cnn_config_from(const json& j) {
    CnnConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline json to_json(const CnnArchitecture& arch) {
    json layers = json::array();
    for (const LayerSpec& layer : arch) {
        json l;
        switch (layer.kind) {
            case LayerSpec::Kind::conv:
                l = {{"type", "conv"},
                     {"out_channels", layer.out_channels},
                     {"kernel_h", layer.kernel_h},
                     {"kernel_w", layer.kernel_w}};
                break;
            case LayerSpec::Kind::relu:
                l = {{"type", "relu"}};
                break;
            case LayerSpec::Kind::maxpool2:
                l = {{"type", "maxpool2"}};
                break;
            case LayerSpec::Kind::global_avg_pool:
                l = {{"type", "global_avg_pool"}};
                break;
            case LayerSpec::Kind::dense:
                l = {{"type", "dense"}, {"out_features", layer.out_features}};
                break;
        }
        layers.push_back(std::move(l));
    }
    return layers;
}

inline CnnArchitecture architecture_from(const json& j) {
    CnnArchitecture arch;
    for (const auto& l : j) {
        const std::string type = l.at("type").get<std::string>();
        if (type == "conv")
            arch.push_back(LayerSpec::conv(l.at("out_channels"), l.at("kernel_h"),
                                           l.at("kernel_w")));
        else if (type == "relu")
            arch.push_back(LayerSpec::relu());
        else if (type == "maxpool2")
            arch.push_back(LayerSpec::maxpool2());
        else if (type == "global_avg_pool")
            arch.push_back(LayerSpec::global_avg_pool());
        else if (type == "dense")
            arch.push_back(LayerSpec::dense(l.at("out_features")));
        else
            throw CorruptModelError("unknown layer type: " + type);
    }
    return arch;
}

}  // namespace demgrade::jsonutil
