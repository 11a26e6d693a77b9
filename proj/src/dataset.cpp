#include "demgrade/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "demgrade/codec.hpp"
#include "demgrade/errors.hpp"
#include "demgrade/parallel.hpp"
#include "demgrade/rng.hpp"

namespace demgrade {

namespace fs = std::filesystem;

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.class_label);
    return out;
}

std::vector<size_t> Dataset::class_counts() const {
    std::vector<size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) counts[static_cast<size_t>(s.class_label)]++;
    return counts;
}

namespace {

std::string lower_alnum(const std::string& s) {
    std::string out;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

int class_index_for_directory(const std::string& dir_name) {
    const std::string key = lower_alnum(dir_name);
    for (size_t i = 0; i < kClassNames.size(); ++i)
        if (key == lower_alnum(kClassNames[i])) return static_cast<int>(i);
    return -1;
}

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
    if (!fs::exists(root)) throw PathError("dataset root does not exist: " + root.string());
    if (!fs::is_directory(root)) throw PathError("dataset root is not a directory: " + root.string());

    // (class index, directory name, file name), sorted for a deterministic
    // order regardless of filesystem enumeration.
    struct PendingFile {
        int class_label;
        std::string dir_name;
        std::string file_name;
    };
    std::vector<PendingFile> files;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string dir_name = entry.path().filename().string();
        const int label = class_index_for_directory(dir_name);
        if (label < 0)
            throw PathError("unrecognized class directory '" + dir_name +
                            "' (expected one of the four dementia-level names)");
        for (const auto& f : fs::directory_iterator(entry.path())) {
            if (!f.is_regular_file() || !has_image_extension(f.path())) continue;
            files.push_back({label, dir_name, f.path().filename().string()});
        }
    }
    std::sort(files.begin(), files.end(), [](const PendingFile& a, const PendingFile& b) {
        if (a.class_label != b.class_label) return a.class_label < b.class_label;
        return a.file_name < b.file_name;
    });
    if (files.empty()) throw EmptyDatasetError("no decodable images under " + root.string());

    Dataset ds;
    ds.class_names.assign(kClassNames.begin(), kClassNames.end());
    ds.samples.resize(files.size());
    parallel_for(files.size(), [&](size_t i) {
        const auto& f = files[i];
        Sample s;
        s.image = decode_file_to_grayscale(root / f.dir_name / f.file_name);
        s.class_label = f.class_label;
        s.relative_path = f.dir_name + "/" + f.file_name;
        ds.samples[i] = std::move(s);
    });
    for (const auto& s : ds.samples)
        if (s.image.width != kExpectedSide || s.image.height != kExpectedSide)
            ds.nonstandard_size_count++;
    return ds;
}

Image resize_area(const Image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ArgumentError("resize target must be at least 1x1");
    if (out_w == img.width && out_h == img.height) return img;

    const double x_scale = static_cast<double>(img.width) / out_w;
    const double y_scale = static_cast<double>(img.height) / out_h;
    Image out(out_w, out_h);
    for (int oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * y_scale;
        const double y1 = (oy + 1) * y_scale;
        for (int ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * x_scale;
            const double x1 = (ox + 1) * x_scale;
            double total = 0.0;
            // Area-weighted sum over the covered source cells; partial cells
            // contribute their overlap fraction.
            const int sy_begin = static_cast<int>(std::floor(y0));
            const int sy_end = std::min(img.height, static_cast<int>(std::ceil(y1)));
            const int sx_begin = static_cast<int>(std::floor(x0));
            const int sx_end = std::min(img.width, static_cast<int>(std::ceil(x1)));
            for (int sy = sy_begin; sy < sy_end; ++sy) {
                const double hy = std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
                for (int sx = sx_begin; sx < sx_end; ++sx) {
                    const double wx = std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
                    total += hy * wx * img.at(sx, sy);
                }
            }
            const double mean = total / (x_scale * y_scale);
            const long rounded = std::lround(mean);
            out.at(ox, oy) = static_cast<uint8_t>(rounded < 0 ? 0 : (rounded > 255 ? 255 : rounded));
        }
    }
    return out;
}

SplitPartition stratified_split(const std::vector<int>& labels_by_index, int n_classes,
                                const SplitRatios& ratios, uint64_t seed,
                                const std::vector<std::string>* class_names) {
    const double parts[3] = {ratios.train, ratios.validation, ratios.test};
    for (double p : parts)
        if (p < 0.0) throw ArgumentError("split ratios must be non-negative");
    if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9)
        throw ArgumentError("split ratios must sum to 1");
    int nonzero_parts = 0;
    for (double p : parts)
        if (p > 0.0) nonzero_parts++;
    if (nonzero_parts == 0) throw ArgumentError("at least one split ratio must be positive");

    std::vector<std::vector<size_t>> per_class(static_cast<size_t>(n_classes));
    for (size_t i = 0; i < labels_by_index.size(); ++i) {
        const int label = labels_by_index[i];
        if (label < 0 || label >= n_classes) throw ArgumentError("class label out of range");
        per_class[static_cast<size_t>(label)].push_back(i);
    }

    SplitPartition out;
    out.seed = seed;
    for (int c = 0; c < n_classes; ++c) {
        auto& indices = per_class[static_cast<size_t>(c)];
        if (indices.empty()) continue;
        const size_t n = indices.size();
        if (n < static_cast<size_t>(nonzero_parts)) {
            const std::string name = class_names && static_cast<size_t>(c) < class_names->size()
                                         ? (*class_names)[static_cast<size_t>(c)]
                                         : "class " + std::to_string(c);
            throw StratifyError(name + " has " + std::to_string(n) +
                                " samples, fewer than the " + std::to_string(nonzero_parts) +
                                " nonzero split parts");
        }

        SplitMix64 rng(derive_seed(seed, static_cast<uint64_t>(c)));
        shuffle(indices, rng);

        // Largest-remainder apportionment: every part receives floor(exact)
        // or floor(exact)+1, so counts stay within one sample of the
        // requested proportion.
        size_t counts[3];
        double remainders[3];
        size_t assigned = 0;
        for (int p = 0; p < 3; ++p) {
            const double exact = parts[p] * static_cast<double>(n);
            counts[p] = static_cast<size_t>(std::floor(exact));
            remainders[p] = exact - static_cast<double>(counts[p]);
            assigned += counts[p];
        }
        while (assigned < n) {
            int best = -1;
            for (int p = 0; p < 3; ++p) {
                if (parts[p] <= 0.0) continue;
                if (best < 0 || remainders[p] > remainders[best]) best = p;
            }
            counts[best]++;
            remainders[best] = -1.0;
            assigned++;
        }

        size_t cursor = 0;
        for (size_t i = 0; i < counts[0]; ++i) out.train.push_back(indices[cursor++]);
        for (size_t i = 0; i < counts[1]; ++i) out.validation.push_back(indices[cursor++]);
        for (size_t i = 0; i < counts[2]; ++i) out.test.push_back(indices[cursor++]);
    }
    return out;
}

SplitPartition stratified_split(const Dataset& ds, const SplitRatios& ratios, uint64_t seed) {
    return stratified_split(ds.labels(), static_cast<int>(ds.class_names.size()), ratios, seed,
                            &ds.class_names);
}

}  // namespace demgrade
