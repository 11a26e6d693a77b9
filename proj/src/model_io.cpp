#include "demgrade/model_io.hpp"

#include <json.hpp>

#include "demgrade/binio.hpp"
#include "demgrade/hash.hpp"
#include "json_util.hpp"

namespace demgrade {

using nlohmann::json;

namespace {

json pipeline_to_json(const FeaturePipeline& p) {
    return {{"resolution", p.resolution},
            {"watershed", p.watershed},
            {"watershed_params", jsonutil::to_json(p.watershed_params)},
            {"augment", p.augment}};
}

FeaturePipeline pipeline_from_json(const json& j) {
    FeaturePipeline p;
    p.resolution = j.value("resolution", p.resolution);
    p.watershed = j.value("watershed", p.watershed);
    if (j.contains("watershed_params"))
        p.watershed_params = jsonutil::watershed_params_from(j.at("watershed_params"));
    p.augment = j.value("augment", p.augment);
    return p;
}

// Trees serialize as nested records: internal nodes carry their subtrees.
json tree_node_json(const Tree& tree, int index) {
    const TreeNode& n = tree.nodes[static_cast<size_t>(index)];
    if (n.is_leaf()) return {{"h", n.histogram}};
    return {{"f", n.feature},
            {"t", n.threshold},
            {"l", tree_node_json(tree, n.left)},
            {"r", tree_node_json(tree, n.right)}};
}

int tree_node_from_json(const json& node_json, Tree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (node_json.contains("h")) {
        tree.nodes[static_cast<size_t>(index)].histogram =
            node_json.at("h").get<std::vector<uint32_t>>();
        return index;
    }
    const int left = tree_node_from_json(node_json.at("l"), tree);
    const int right = tree_node_from_json(node_json.at("r"), tree);
    TreeNode& n = tree.nodes[static_cast<size_t>(index)];
    n.feature = node_json.at("f").get<int>();
    n.threshold = node_json.at("t").get<double>();
    n.left = left;
    n.right = right;
    return index;
}

json forest_to_json(const ForestModel& model) {
    json trees = json::array();
    for (const Tree& tree : model.trees) trees.push_back(tree_node_json(tree, 0));
    return {{"n_features", model.n_features},
            {"n_classes", model.n_classes},
            {"config", jsonutil::to_json(model.config)},
            {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& j) {
    ForestModel model;
    model.n_features = j.at("n_features").get<int>();
    model.n_classes = j.at("n_classes").get<int>();
    model.config = jsonutil::rf_config_from(j.at("config"));
    for (const auto& tree_json : j.at("trees")) {
        Tree tree;
        tree_node_from_json(tree_json, tree);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::string digest_of(const json& doc) { return fnv1a64_hex(doc.dump()); }

void check_version(const json& doc) {
    const int version = doc.value("format_version", -1);
    if (version != kModelFormatVersion)
        throw VersionError("model format version " + std::to_string(version) +
                           " unsupported (expected " + std::to_string(kModelFormatVersion) + ")");
}

json parse_model_json(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file_text(path));
    } catch (const json::exception& e) {
        throw CorruptModelError("model file is not valid JSON (" + std::string(e.what()) + "): " +
                                path.string());
    }
    if (doc.value("format", "") != "demgrade-model")
        throw CorruptModelError("not a demgrade model file: " + path.string());
    check_version(doc);
    json expected = doc;
    expected.erase("digest");
    if (doc.value("digest", "") != digest_of(expected))
        throw CorruptModelError("model digest mismatch (file corrupted?): " + path.string());
    return doc;
}

std::vector<uint8_t> read_sidecar(const std::filesystem::path& json_path,
                                  const std::string& file_name, const std::string& digest,
                                  size_t expected_bytes) {
    const auto path = json_path.parent_path() / file_name;
    std::vector<uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const PathError&) {
        throw CorruptModelError("model data file missing: " + path.string());
    }
    if (bytes.size() != expected_bytes)
        throw CorruptModelError("model data file has wrong size: " + path.string());
    if (fnv1a64_hex(bytes.data(), bytes.size()) != digest)
        throw CorruptModelError("model data digest mismatch: " + path.string());
    return bytes;
}

}  // namespace

const char* model_kind_name(const AnyModel& model) {
    if (std::holds_alternative<ForestModel>(model)) return "rf";
    if (std::holds_alternative<SvmModel>(model)) return "svm";
    return "cnn";
}

void save_model(const SavedModel& saved, const std::filesystem::path& json_path) {
    json doc;
    doc["format"] = "demgrade-model";
    doc["format_version"] = kModelFormatVersion;
    doc["kind"] = model_kind_name(saved.model);
    doc["pipeline"] = pipeline_to_json(saved.pipeline);

    if (const auto* rf = std::get_if<ForestModel>(&saved.model)) {
        doc["rf"] = forest_to_json(*rf);
    } else if (const auto* svm = std::get_if<SvmModel>(&saved.model)) {
        std::vector<uint8_t> matrix;
        json machines = json::array();
        size_t rows = 0;
        for (size_t m = 0; m < svm->machines.size(); ++m) {
            const BinarySvm& machine = svm->machines[m];
            json mj;
            mj["a"] = svm->class_pairs[m].first;
            mj["b"] = svm->class_pairs[m].second;
            mj["bias"] = machine.bias;
            mj["converged"] = machine.converged;
            mj["dual_coefs"] = machine.dual_coefs;
            std::vector<size_t> sv_rows;
            for (const auto& sv : machine.support_vectors) {
                for (double v : sv) append_f32_le(matrix, static_cast<float>(v));
                sv_rows.push_back(rows++);
            }
            mj["sv_rows"] = sv_rows;
            machines.push_back(std::move(mj));
        }
        const std::string vectors_name = json_path.filename().string() + ".vecs";
        write_file_bytes(json_path.parent_path() / vectors_name, matrix);
        doc["svm"] = {{"strategy", svm->strategy == MulticlassStrategy::one_vs_rest ? "ovr"
                                                                                       : "ovo"},
                      {"params", jsonutil::to_json(svm->machines.empty()
                                                       ? KernelParams{}
                                                       : svm->machines.front().params)},
                      {"scaler", {{"mean", svm->scaler.mean}, {"scale", svm->scaler.scale}}},
                      {"n_features", svm->n_features},
                      {"classes", svm->classes},
                      {"vectors_file", vectors_name},
                      {"vectors_rows", rows},
                      {"vectors_digest", fnv1a64_hex(matrix.data(), matrix.size())},
                      {"machines", std::move(machines)}};
    } else {
        const auto& cnn = std::get<CnnModel>(saved.model);
        std::vector<uint8_t> blob;
        for (const auto& layer : cnn.net.params) {
            for (float w : layer.weights) append_f32_le(blob, w);
            for (float b : layer.biases) append_f32_le(blob, b);
        }
        const std::string weights_name = json_path.filename().string() + ".weights";
        write_file_bytes(json_path.parent_path() / weights_name, blob);
        json shapes = json::array();
        for (const ShapeInfo& s : shape_chain(cnn.net.arch, cnn.net.input_shape))
            shapes.push_back({{"ch", s.ch}, {"h", s.h}, {"w", s.w}});
        doc["cnn"] = {{"architecture", jsonutil::to_json(cnn.net.arch)},
                      {"input",
                       {{"ch", cnn.net.input_shape.ch},
                        {"h", cnn.net.input_shape.h},
                        {"w", cnn.net.input_shape.w}}},
                      {"shapes", std::move(shapes)},
                      {"seed", cnn.config.seed},
                      {"config", jsonutil::to_json(cnn.config)},
                      {"weights_file", weights_name},
                      {"weights_count", cnn.net.total_parameters()},
                      {"weights_digest", fnv1a64_hex(blob.data(), blob.size())}};
    }

    doc["digest"] = digest_of(doc);
    write_file_text(json_path, doc.dump(2) + "\n");
}

SavedModel load_model(const std::filesystem::path& json_path) {
    const json doc = parse_model_json(json_path);
    SavedModel saved;
    saved.pipeline = pipeline_from_json(doc.at("pipeline"));
    const std::string kind = doc.value("kind", "");
    try {
        if (kind == "rf") {
            saved.model = forest_from_json(doc.at("rf"));
        } else if (kind == "svm") {
            const json& sj = doc.at("svm");
            SvmModel model;
            model.strategy = sj.value("strategy", "ovo") == std::string("ovr")
                                 ? MulticlassStrategy::one_vs_rest
                                 : MulticlassStrategy::one_vs_one;
            model.n_features = sj.at("n_features").get<int>();
            model.classes = sj.at("classes").get<std::vector<int>>();
            model.scaler.mean = sj.at("scaler").at("mean").get<std::vector<double>>();
            model.scaler.scale = sj.at("scaler").at("scale").get<std::vector<double>>();
            const KernelParams params = jsonutil::kernel_params_from(sj.at("params"));
            const size_t rows = sj.at("vectors_rows").get<size_t>();
            const size_t dim = static_cast<size_t>(model.n_features);
            const auto matrix = read_sidecar(json_path, sj.at("vectors_file").get<std::string>(),
                                             sj.at("vectors_digest").get<std::string>(),
                                             rows * dim * 4);
            for (const auto& mj : sj.at("machines")) {
                BinarySvm machine;
                machine.params = params;
                machine.bias = mj.at("bias").get<double>();
                machine.converged = mj.at("converged").get<bool>();
                machine.dual_coefs = mj.at("dual_coefs").get<std::vector<double>>();
                for (size_t row : mj.at("sv_rows").get<std::vector<size_t>>()) {
                    if (row >= rows)
                        throw CorruptModelError("support-vector row out of range: " +
                                                json_path.string());
                    std::vector<double> sv(dim);
                    for (size_t c = 0; c < dim; ++c)
                        sv[c] = read_f32_le(matrix.data() + (row * dim + c) * 4);
                    machine.support_vectors.push_back(std::move(sv));
                }
                model.class_pairs.emplace_back(mj.at("a").get<int>(), mj.at("b").get<int>());
                model.machines.push_back(std::move(machine));
            }
            saved.model = std::move(model);
        } else if (kind == "cnn") {
            const json& cj = doc.at("cnn");
            CnnModel model;
            model.net.arch = jsonutil::architecture_from(cj.at("architecture"));
            model.net.input_shape = {cj.at("input").at("ch").get<int>(),
                                     cj.at("input").at("h").get<int>(),
                                     cj.at("input").at("w").get<int>()};
            model.config = jsonutil::cnn_config_from(cj.at("config"));
            model.net.build();
            const size_t count = cj.at("weights_count").get<size_t>();
            if (count != model.net.total_parameters())
                throw CorruptModelError("weight count does not match architecture: " +
                                        json_path.string());
            const auto blob = read_sidecar(json_path, cj.at("weights_file").get<std::string>(),
                                           cj.at("weights_digest").get<std::string>(), count * 4);
            size_t offset = 0;
            for (auto& layer : model.net.params) {
                for (float& w : layer.weights) {
                    w = read_f32_le(blob.data() + offset);
                    offset += 4;
                }
                for (float& b : layer.biases) {
                    b = read_f32_le(blob.data() + offset);
                    offset += 4;
                }
            }
            saved.model = std::move(model);
        } else {
            throw CorruptModelError("unknown model kind '" + kind + "': " + json_path.string());
        }
    } catch (const json::exception& e) {
        throw CorruptModelError("model file missing required fields (" + std::string(e.what()) +
                                "): " + json_path.string());
    }
    return saved;
}

}  // namespace demgrade
