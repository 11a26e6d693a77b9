#include "demgrade/manifest.hpp"

#include <algorithm>

#include <json.hpp>

#include "demgrade/binio.hpp"
#include "demgrade/codec.hpp"
#include "demgrade/errors.hpp"
#include "demgrade/hash.hpp"
#include "demgrade/parallel.hpp"

namespace demgrade {

using nlohmann::json;

namespace {

constexpr int kManifestFormatVersion = 1;

bool is_pgm(const std::string& path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".pgm";
}

}  // namespace

Manifest build_manifest(const std::filesystem::path& root) {
    const Dataset ds = load_dataset(root);
    Manifest m;
    m.root = std::filesystem::absolute(root).lexically_normal().string();
    m.class_names = ds.class_names;
    m.entries.resize(ds.samples.size());
    parallel_for(ds.samples.size(), [&](size_t i) {
        const Sample& s = ds.samples[i];
        ManifestEntry e;
        e.path = s.relative_path;
        e.class_label = s.class_label;
        e.width = s.image.width;
        e.height = s.image.height;
        const auto bytes = read_file_bytes(root / s.relative_path);
        e.content_hash = fnv1a64_hex(bytes.data(), bytes.size());
        m.entries[i] = std::move(e);
    });
    return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "demgrade-manifest";
    doc["format_version"] = kManifestFormatVersion;
    doc["root"] = manifest.root;
    doc["class_names"] = manifest.class_names;
    doc["features"] = manifest.features;
    doc["degenerate_count"] = manifest.degenerate_count;
    json entries = json::array();
    for (const auto& e : manifest.entries) {
        json entry;
        entry["path"] = e.path;
        entry["class"] = e.class_label;
        entry["width"] = e.width;
        entry["height"] = e.height;
        entry["hash"] = e.content_hash;
        if (e.degenerate) entry["degenerate"] = true;
        entries.push_back(std::move(entry));
    }
    doc["samples"] = std::move(entries);
    write_file_text(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file_text(path));
    } catch (const json::exception& e) {
        throw DecodeError("manifest is not valid JSON: " + std::string(e.what()), path.string());
    }
    try {
        if (doc.value("format", "") != "demgrade-manifest")
            throw DecodeError("not a demgrade manifest", path.string());
        const int version = doc.value("format_version", 0);
        if (version != kManifestFormatVersion)
            throw VersionError("manifest format version " + std::to_string(version) +
                               " unsupported (expected " + std::to_string(kManifestFormatVersion) +
                               ")");
        Manifest m;
        m.root = doc.at("root").get<std::string>();
        m.class_names = doc.at("class_names").get<std::vector<std::string>>();
        m.features = doc.value("features", "raw");
        m.degenerate_count = doc.value("degenerate_count", size_t{0});
        for (const auto& entry : doc.at("samples")) {
            ManifestEntry e;
            e.path = entry.at("path").get<std::string>();
            e.class_label = entry.at("class").get<int>();
            e.width = entry.value("width", 0);
            e.height = entry.value("height", 0);
            e.content_hash = entry.value("hash", "");
            e.degenerate = entry.value("degenerate", false);
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const json::exception& e) {
        throw DecodeError("manifest missing required fields: " + std::string(e.what()),
                          path.string());
    }
}

Dataset load_from_manifest(const Manifest& manifest) {
    if (manifest.entries.empty()) throw EmptyDatasetError("manifest lists no samples");
    Dataset ds;
    ds.class_names = manifest.class_names;
    ds.samples.resize(manifest.entries.size());
    const std::filesystem::path root(manifest.root);
    parallel_for(manifest.entries.size(), [&](size_t i) {
        const ManifestEntry& e = manifest.entries[i];
        Sample s;
        const auto full = root / e.path;
        s.image = is_pgm(e.path) ? read_pgm(full) : decode_file_to_grayscale(full);
        s.class_label = e.class_label;
        s.relative_path = e.path;
        ds.samples[i] = std::move(s);
    });
    for (const auto& s : ds.samples)
        if (s.image.width != kExpectedSide || s.image.height != kExpectedSide)
            ds.nonstandard_size_count++;
    return ds;
}

}  // namespace demgrade
