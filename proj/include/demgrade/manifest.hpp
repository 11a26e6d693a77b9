#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demgrade/dataset.hpp"

namespace demgrade {

struct ManifestEntry {
    std::string path;  // relative to root, '/' separated
    int class_label = 0;
    int width = 0;
    int height = 0;
    std::string content_hash;  // fnv1a64 of the encoded file bytes
    bool degenerate = false;   // watershed fallback flag (feature manifests)
};

struct Manifest {
    std::string root;  // directory the entry paths are relative to
    std::vector<std::string> class_names;
    std::string features = "raw";  // "raw" or "watershed"
    size_t degenerate_count = 0;
    std::vector<ManifestEntry> entries;
};

// Scans the dataset directory (decoding every file) and builds the ingest
// manifest. Hashes cover the encoded bytes on disk.
Manifest build_manifest(const std::filesystem::path& root);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

// Loads the images a manifest points at (PNG/JPEG via the decoder, PGM
// directly). Order follows the manifest entries.
Dataset load_from_manifest(const Manifest& manifest);

}  // namespace demgrade
