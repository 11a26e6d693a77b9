#include "demgrade/watershed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "demgrade/errors.hpp"

namespace demgrade {

size_t BinaryMask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

BinaryMask BinaryMask::complement() const {
    BinaryMask out(width, height);
    for (size_t i = 0; i < bits.size(); ++i) out.bits[i] = bits[i] ? 0 : 1;
    return out;
}

double DistanceMap::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

namespace {

// Exact rational comparison of the between-class variance score
//   (s0*w1 - s1*w0)^2 / (w0*w1)
// in 128-bit integers; exact for images up to 128x128.
struct OtsuScore {
    unsigned __int128 numerator = 0;  // squared weighted mean gap
    unsigned __int128 denominator = 1;
    bool valid = false;

    bool better_than(const OtsuScore& other) const {
        if (!valid) return false;
        if (!other.valid) return true;
        return numerator * other.denominator > other.numerator * denominator;
    }
};

OtsuScore otsu_score(int64_t w0, int64_t s0, int64_t w1, int64_t s1) {
    OtsuScore score;
    if (w0 == 0 || w1 == 0) return score;
    const __int128 gap = static_cast<__int128>(s0) * w1 - static_cast<__int128>(s1) * w0;
    const __int128 gap_abs = gap < 0 ? -gap : gap;
    score.numerator = static_cast<unsigned __int128>(gap_abs) * static_cast<unsigned __int128>(gap_abs);
    score.denominator = static_cast<unsigned __int128>(w0) * static_cast<unsigned __int128>(w1);
    score.valid = true;
    return score;
}

}  // namespace

OtsuResult otsu_threshold(const Image& img, bool invert) {
    if (img.width < 1 || img.height < 1) throw ArgumentError("otsu_threshold on empty image");

    int64_t histogram[256] = {0};
    for (uint8_t p : img.pixels) histogram[p]++;

    int64_t total_count = static_cast<int64_t>(img.pixels.size());
    int64_t total_sum = 0;
    for (int v = 0; v < 256; ++v) total_sum += histogram[v] * v;

    int best_level = -1;
    OtsuScore best_score;
    int64_t w0 = 0, s0 = 0;
    for (int level = 0; level < 256; ++level) {
        w0 += histogram[level];
        s0 += histogram[level] * level;
        const OtsuScore score = otsu_score(w0, s0, total_count - w0, total_sum - s0);
        if (score.better_than(best_score)) {
            best_score = score;
            best_level = level;
        }
    }
    if (best_level < 0) {
        // Constant image: every threshold leaves one class empty.
        best_level = static_cast<int>(img.pixels[0]);
    }

    OtsuResult out;
    out.level = best_level;
    out.mask = BinaryMask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        const bool fg = img.pixels[i] > best_level;
        out.mask.bits[i] = (fg != invert) ? 1 : 0;
    }
    return out;
}

namespace {

BinaryMask morph_once(const BinaryMask& mask, bool erode, int radius) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool value = erode;  // erode: AND over window; dilate: OR
            for (int dy = -radius; dy <= radius && value == erode; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    // Out-of-bounds neighbors are background.
                    const bool bit = nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height &&
                                     mask.at(nx, ny);
                    if (erode && !bit) {
                        value = false;
                        break;
                    }
                    if (!erode && bit) {
                        value = true;
                        break;
                    }
                }
            }
            out.set(x, y, value);
        }
    }
    return out;
}

}  // namespace

BinaryMask morphology(const BinaryMask& mask, MorphOp op, int iterations, int element_size) {
    if (iterations < 1) throw ArgumentError("morphology requires iterations >= 1");
    if (element_size < 1 || element_size % 2 == 0)
        throw ArgumentError("structuring element size must be odd and positive");
    const int radius = element_size / 2;
    BinaryMask current = mask;
    if (op == MorphOp::open) {
        for (int i = 0; i < iterations; ++i) current = morph_once(current, true, radius);
        for (int i = 0; i < iterations; ++i) current = morph_once(current, false, radius);
        return current;
    }
    const bool erode = op == MorphOp::erode;
    for (int i = 0; i < iterations; ++i) current = morph_once(current, erode, radius);
    return current;
}

namespace {

// 1-D squared-distance transform (Felzenszwalb & Huttenlocher). f holds the
// source costs; returns the lower envelope sampled at every position.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

DistanceMap distance_transform(const BinaryMask& mask) {
    // Work on a grid padded with a one-pixel background ring so the image
    // border counts as background. Unknown cells carry a large finite cost;
    // true infinity would make the envelope intersections NaN.
    const int w = mask.width + 2;
    const int h = mask.height + 2;
    const double inf = 1e20;
    std::vector<double> grid(static_cast<size_t>(w) * h, 0.0);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            grid[static_cast<size_t>(y + 1) * w + (x + 1)] = mask.at(x, y) ? inf : 0.0;

    const int longest = std::max(w, h);
    std::vector<double> f(static_cast<size_t>(longest)), d(static_cast<size_t>(longest));
    std::vector<int> v(static_cast<size_t>(longest));
    std::vector<double> z(static_cast<size_t>(longest) + 1);

    for (int x = 0; x < w; ++x) {
        f.resize(static_cast<size_t>(h));
        for (int y = 0; y < h; ++y) f[static_cast<size_t>(y)] = grid[static_cast<size_t>(y) * w + x];
        edt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) grid[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        f.resize(static_cast<size_t>(w));
        for (int x = 0; x < w; ++x) f[static_cast<size_t>(x)] = grid[static_cast<size_t>(y) * w + x];
        edt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) grid[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(x)];
    }

    DistanceMap out;
    out.width = mask.width;
    out.height = mask.height;
    out.values.resize(mask.bits.size());
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            out.values[static_cast<size_t>(y) * mask.width + x] =
                std::sqrt(grid[static_cast<size_t>(y + 1) * w + (x + 1)]);
    return out;
}

namespace {

struct NeighborTable {
    int dx[8];
    int dy[8];
    int count;
};

NeighborTable neighbors_for(int connectivity) {
    if (connectivity == 4) return {{0, -1, 1, 0}, {-1, 0, 0, 1}, 4};
    if (connectivity == 8)
        return {{-1, 0, 1, -1, 1, -1, 0, 1}, {-1, -1, -1, 0, 0, 1, 1, 1}, 8};
    throw ArgumentError("connectivity must be 4 or 8");
}

}  // namespace

MarkerExtraction extract_markers(const BinaryMask& sure_fg, const BinaryMask& sure_bg,
                                 int connectivity) {
    if (sure_fg.width != sure_bg.width || sure_fg.height != sure_bg.height)
        throw ArgumentError("sure_fg and sure_bg dimensions differ");
    const NeighborTable nb = neighbors_for(connectivity);
    const int w = sure_fg.width;
    const int h = sure_fg.height;

    MarkerExtraction out;
    out.markers.width = w;
    out.markers.height = h;
    out.markers.labels.assign(static_cast<size_t>(w) * h, 0);

    // Object components first: labels 2, 3, ... in row-major order of each
    // component's first pixel.
    int32_t next_label = 2;
    std::vector<size_t> stack;
    for (size_t start = 0; start < sure_fg.bits.size(); ++start) {
        if (!sure_fg.bits[start] || out.markers.labels[start] != 0) continue;
        const int32_t label = next_label++;
        out.markers.labels[start] = label;
        stack.assign(1, start);
        while (!stack.empty()) {
            const size_t idx = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(idx % static_cast<size_t>(w));
            const int y = static_cast<int>(idx / static_cast<size_t>(w));
            for (int k = 0; k < nb.count; ++k) {
                const int nx = x + nb.dx[k];
                const int ny = y + nb.dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t nidx = static_cast<size_t>(ny) * w + nx;
                if (sure_fg.bits[nidx] && out.markers.labels[nidx] == 0) {
                    out.markers.labels[nidx] = label;
                    stack.push_back(nidx);
                }
            }
        }
    }
    out.object_count = next_label - 2;

    for (size_t i = 0; i < sure_bg.bits.size(); ++i) {
        if (!sure_bg.bits[i]) continue;
        if (sure_fg.bits[i]) {
            out.overlap_count++;  // foreground takes precedence
        } else {
            out.markers.labels[i] = 1;
        }
    }
    return out;
}

LabelMap watershed_flood(const Image& img, const MarkerMap& markers, int connectivity,
                         std::vector<int32_t>* pop_key_trace) {
    if (img.width != markers.width || img.height != markers.height)
        throw ArgumentError("image and marker dimensions differ");
    bool any_marker = false;
    for (int32_t m : markers.labels)
        if (m > 0) {
            any_marker = true;
            break;
        }
    if (!any_marker) throw MarkerError("watershed_flood requires at least one marker");

    const NeighborTable nb = neighbors_for(connectivity);
    const int w = img.width;
    const int h = img.height;
    LabelMap out;
    out.width = w;
    out.height = h;
    out.labels.assign(markers.labels.begin(), markers.labels.end());

    // Min-heap keyed by (flood level, insertion sequence).
    struct QueueEntry {
        int32_t level;
        uint64_t seq;
        int32_t index;
        bool operator>(const QueueEntry& other) const {
            return std::tie(level, seq) > std::tie(other.level, other.seq);
        }
    };
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;
    uint64_t seq = 0;

    auto push_neighbors = [&](int x, int y, int32_t from_level) {
        for (int k = 0; k < nb.count; ++k) {
            const int nx = x + nb.dx[k];
            const int ny = y + nb.dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const size_t nidx = static_cast<size_t>(ny) * w + nx;
            if (out.labels[nidx] != 0) continue;
            const int32_t level = std::max(from_level, static_cast<int32_t>(img.pixels[nidx]));
            queue.push({level, seq++, static_cast<int32_t>(nidx)});
        }
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (out.labels[static_cast<size_t>(y) * w + x] > 0)
                push_neighbors(x, y, img.pixels[static_cast<size_t>(y) * w + x]);

    while (!queue.empty()) {
        const QueueEntry entry = queue.top();
        queue.pop();
        if (pop_key_trace) pop_key_trace->push_back(entry.level);
        const size_t idx = static_cast<size_t>(entry.index);
        if (out.labels[idx] != 0) continue;  // decided by an earlier pop
        const int x = static_cast<int>(idx % static_cast<size_t>(w));
        const int y = static_cast<int>(idx / static_cast<size_t>(w));

        int32_t found_label = 0;
        bool conflict = false;
        for (int k = 0; k < nb.count; ++k) {
            const int nx = x + nb.dx[k];
            const int ny = y + nb.dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int32_t neighbor = out.labels[static_cast<size_t>(ny) * w + nx];
            if (neighbor <= 0) continue;
            if (found_label == 0) {
                found_label = neighbor;
            } else if (neighbor != found_label) {
                conflict = true;
                break;
            }
        }
        if (conflict) {
            out.labels[idx] = -1;  // boundary; boundaries do not propagate
        } else {
            out.labels[idx] = found_label;
            push_neighbors(x, y, entry.level);
        }
    }

    // Pixels sealed off behind boundary lines are unreachable through any
    // basin; fold them into the boundary so every pixel is decided.
    for (auto& label : out.labels)
        if (label == 0) label = -1;
    return out;
}

SegmentationResult run_watershed(const Image& img, const WatershedParams& params) {
    SegmentationResult r;
    const OtsuResult otsu = otsu_threshold(img, params.invert_threshold);
    r.otsu_level = otsu.level;
    r.threshold_mask = otsu.mask;

    r.opened = params.open_iterations > 0
                   ? morphology(r.threshold_mask, MorphOp::open, params.open_iterations,
                                params.element_size)
                   : r.threshold_mask;
    r.possible_fg = params.dilate_iterations > 0
                        ? morphology(r.opened, MorphOp::dilate, params.dilate_iterations,
                                     params.element_size)
                        : r.opened;
    r.sure_bg = r.possible_fg.complement();
    r.distance = distance_transform(r.opened);

    const double cut = params.fg_ratio * r.distance.max_value();
    r.sure_fg = BinaryMask(img.width, img.height);
    for (size_t i = 0; i < r.distance.values.size(); ++i)
        r.sure_fg.bits[i] = r.distance.values[i] > cut ? 1 : 0;

    r.markers = extract_markers(r.sure_fg, r.sure_bg, params.component_connectivity);
    if (r.markers.object_count == 0) {
        r.degenerate = true;
        r.features = img;
        r.labels.width = img.width;
        r.labels.height = img.height;
        r.labels.labels.assign(img.pixels.size(), 1);
        return r;
    }

    r.labels = watershed_flood(img, r.markers.markers, params.flood_connectivity);
    r.features = img;
    for (size_t i = 0; i < r.labels.labels.size(); ++i)
        if (r.labels.labels[i] == -1) r.features.pixels[i] = 255;
    return r;
}

FeatureImage watershed_features(const Image& img, const WatershedParams& params) {
    SegmentationResult r = run_watershed(img, params);
    return {std::move(r.features), r.degenerate};
}

}  // namespace demgrade
