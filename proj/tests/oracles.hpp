#pragma once

// Independent reference implementations used as test oracles. Everything in
// here is deliberately naive (exhaustive scans, brute-force enumeration) and
// shares no code with the library paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "demgrade/features.hpp"
#include "demgrade/image.hpp"
#include "demgrade/svm.hpp"
#include "demgrade/watershed.hpp"

namespace oracles {

// Test-side copy of the published SplitMix64 step, kept separate from the
// library so a regression there cannot hide here.
struct RefSplitMix64 {
    uint64_t state;
    explicit RefSplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    uint64_t next_below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }
};

// O(n^2 m^2) nearest-background scan; the image border counts as background.
inline std::vector<double> brute_force_edt(const demgrade::BinaryMask& mask) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<double> out(static_cast<size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            int64_t best = std::numeric_limits<int64_t>::max();
            // In-image background pixels.
            for (int by = 0; by < h; ++by)
                for (int bx = 0; bx < w; ++bx)
                    if (!mask.at(bx, by)) {
                        const int64_t dx = x - bx;
                        const int64_t dy = y - by;
                        best = std::min(best, dx * dx + dy * dy);
                    }
            // Virtual background ring just outside the image.
            const int64_t ring = std::min(std::min(x + 1, y + 1), std::min(w - x, h - y));
            best = std::min(best, ring * ring);
            out[static_cast<size_t>(y) * w + x] = std::sqrt(static_cast<double>(best));
        }
    }
    return out;
}

// Exhaustive 256-threshold Otsu with the same exact-integer comparison rule:
// maximize (s0*w1 - s1*w0)^2 / (w0*w1), skip empty classes, ties to the
// smallest level; constant image yields that constant.
inline int exhaustive_otsu(const demgrade::Image& img) {
    int best_level = -1;
    unsigned __int128 best_num = 0, best_den = 1;
    bool have_best = false;
    for (int level = 0; level < 256; ++level) {
        int64_t w0 = 0, s0 = 0, w1 = 0, s1 = 0;
        for (uint8_t p : img.pixels) {
            if (p <= level) {
                w0++;
                s0 += p;
            } else {
                w1++;
                s1 += p;
            }
        }
        if (w0 == 0 || w1 == 0) continue;
        __int128 gap = static_cast<__int128>(s0) * w1 - static_cast<__int128>(s1) * w0;
        if (gap < 0) gap = -gap;
        const unsigned __int128 num =
            static_cast<unsigned __int128>(gap) * static_cast<unsigned __int128>(gap);
        const unsigned __int128 den =
            static_cast<unsigned __int128>(w0) * static_cast<unsigned __int128>(w1);
        if (!have_best || num * best_den > best_num * den) {
            have_best = true;
            best_num = num;
            best_den = den;
            best_level = level;
        }
    }
    if (!have_best) return img.pixels[0];
    return best_level;
}

// Neighborhood sweep morphology; out-of-bounds is background for both ops.
inline demgrade::BinaryMask brute_force_morph(const demgrade::BinaryMask& mask, bool erode) {
    demgrade::BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            bool all = true, any = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    const bool bit = nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height &&
                                     mask.at(nx, ny);
                    all = all && bit;
                    any = any || bit;
                }
            out.set(x, y, erode ? all : any);
        }
    return out;
}

// Union-find connected components over the foreground, 8- or 4-connectivity.
// Returns per-pixel component ids (-1 on background), renumbered 0,1,... in
// row-major order of each component's first pixel.
inline std::vector<int> union_find_components(const demgrade::BinaryMask& mask, int connectivity) {
    const int w = mask.width, h = mask.height;
    std::vector<int> parent(static_cast<size_t>(w) * h);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    auto unite = [&](int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); };
    const int dx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int dy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    const int dx4[4] = {0, -1, 1, 0};
    const int dy4[4] = {-1, 0, 0, 1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    const int nn = connectivity == 8 ? 8 : 4;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            for (int k = 0; k < nn; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx >= 0 && ny >= 0 && nx < w && ny < h && mask.at(nx, ny))
                    unite(y * w + x, ny * w + nx);
            }
        }
    std::vector<int> ids(static_cast<size_t>(w) * h, -1);
    std::vector<int> remap(static_cast<size_t>(w) * h, -1);
    int next_id = 0;
    for (int i = 0; i < w * h; ++i) {
        if (!mask.bits[static_cast<size_t>(i)]) continue;
        const int root = find(i);
        if (remap[static_cast<size_t>(root)] < 0) remap[static_cast<size_t>(root)] = next_id++;
        ids[static_cast<size_t>(i)] = remap[static_cast<size_t>(root)];
    }
    return ids;
}

// Exact solver for the tiny SVM dual: maximize sum(a) - a'Qa/2 subject to
// 0 <= a <= C and y'a = 0, by enumerating every active-set assignment
// (lower / upper / free per variable) and solving the stationarity system on
// the free block. Sound for PSD Q because the optimum satisfies one of the
// enumerated assignments.
inline double tiny_qp_max(const std::vector<std::vector<double>>& Q, const std::vector<int>& y,
                          double C) {
    const int n = static_cast<int>(y.size());
    double best = -std::numeric_limits<double>::infinity();

    std::vector<double> alpha(static_cast<size_t>(n));
    const auto objective = [&](const std::vector<double>& a) {
        double lin = 0.0, quad = 0.0;
        for (int i = 0; i < n; ++i) {
            lin += a[static_cast<size_t>(i)];
            for (int j = 0; j < n; ++j)
                quad += a[static_cast<size_t>(i)] * a[static_cast<size_t>(j)] *
                        Q[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        return lin - 0.5 * quad;
    };

    std::vector<int> state(static_cast<size_t>(n), 0);  // 0=lower,1=upper,2=free
    int64_t total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (int64_t code = 0; code < total; ++code) {
        int64_t c = code;
        for (int i = 0; i < n; ++i) {
            state[static_cast<size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
        }
        std::vector<int> free_idx;
        double fixed_eq = 0.0;  // y'a over the bound variables
        for (int i = 0; i < n; ++i) {
            if (state[static_cast<size_t>(i)] == 2) free_idx.push_back(i);
            alpha[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] == 1 ? C : 0.0;
            if (state[static_cast<size_t>(i)] == 1) fixed_eq += C * y[static_cast<size_t>(i)];
        }
        const int m = static_cast<int>(free_idx.size());
        if (m == 0) {
            if (std::abs(fixed_eq) > 1e-9) continue;
            best = std::max(best, objective(alpha));
            continue;
        }
        // Bordered system: [Q_FF y_F; y_F' 0] [a_F; lambda] = [1 - Q_FB a_B; -fixed_eq]
        const int dim = m + 1;
        std::vector<std::vector<double>> A(static_cast<size_t>(dim),
                                           std::vector<double>(static_cast<size_t>(dim + 1), 0.0));
        for (int r = 0; r < m; ++r) {
            const int i = free_idx[static_cast<size_t>(r)];
            for (int cidx = 0; cidx < m; ++cidx)
                A[static_cast<size_t>(r)][static_cast<size_t>(cidx)] =
                    Q[static_cast<size_t>(i)][static_cast<size_t>(free_idx[static_cast<size_t>(cidx)])];
            A[static_cast<size_t>(r)][static_cast<size_t>(r)] += 1e-12;  // ridge for ties
            A[static_cast<size_t>(r)][static_cast<size_t>(m)] = y[static_cast<size_t>(i)];
            double rhs = 1.0;
            for (int j = 0; j < n; ++j)
                if (state[static_cast<size_t>(j)] == 1)
                    rhs -= Q[static_cast<size_t>(i)][static_cast<size_t>(j)] * C;
            A[static_cast<size_t>(r)][static_cast<size_t>(dim)] = rhs;
        }
        for (int cidx = 0; cidx < m; ++cidx)
            A[static_cast<size_t>(m)][static_cast<size_t>(cidx)] =
                y[static_cast<size_t>(free_idx[static_cast<size_t>(cidx)])];
        A[static_cast<size_t>(m)][static_cast<size_t>(dim)] = -fixed_eq;

        // Gaussian elimination with partial pivoting.
        bool singular = false;
        for (int col = 0; col < dim; ++col) {
            int pivot = col;
            for (int r = col + 1; r < dim; ++r)
                if (std::abs(A[static_cast<size_t>(r)][static_cast<size_t>(col)]) >
                    std::abs(A[static_cast<size_t>(pivot)][static_cast<size_t>(col)]))
                    pivot = r;
            if (std::abs(A[static_cast<size_t>(pivot)][static_cast<size_t>(col)]) < 1e-12) {
                singular = true;
                break;
            }
            std::swap(A[static_cast<size_t>(col)], A[static_cast<size_t>(pivot)]);
            for (int r = col + 1; r < dim; ++r) {
                const double f = A[static_cast<size_t>(r)][static_cast<size_t>(col)] /
                                 A[static_cast<size_t>(col)][static_cast<size_t>(col)];
                for (int k = col; k <= dim; ++k)
                    A[static_cast<size_t>(r)][static_cast<size_t>(k)] -=
                        f * A[static_cast<size_t>(col)][static_cast<size_t>(k)];
            }
        }
        if (singular) continue;
        std::vector<double> sol(static_cast<size_t>(dim));
        for (int r = dim - 1; r >= 0; --r) {
            double v = A[static_cast<size_t>(r)][static_cast<size_t>(dim)];
            for (int k = r + 1; k < dim; ++k)
                v -= A[static_cast<size_t>(r)][static_cast<size_t>(k)] * sol[static_cast<size_t>(k)];
            sol[static_cast<size_t>(r)] = v / A[static_cast<size_t>(r)][static_cast<size_t>(r)];
        }
        bool feasible = true;
        for (int r = 0; r < m; ++r) {
            const double a = sol[static_cast<size_t>(r)];
            if (a < -1e-9 || a > C + 1e-9) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        for (int r = 0; r < m; ++r)
            alpha[static_cast<size_t>(free_idx[static_cast<size_t>(r)])] =
                std::clamp(sol[static_cast<size_t>(r)], 0.0, C);
        best = std::max(best, objective(alpha));
    }
    return best;
}

// PSD check: Cholesky of G + jitter*I succeeds iff lambda_min >= -jitter.
inline bool cholesky_psd_with_jitter(std::vector<std::vector<double>> G, double jitter) {
    const size_t n = G.size();
    for (size_t i = 0; i < n; ++i) G[i][i] += jitter;
    for (size_t c = 0; c < n; ++c) {
        double d = G[c][c];
        for (size_t k = 0; k < c; ++k) d -= G[c][k] * G[c][k];
        if (d <= 0.0) return false;
        G[c][c] = std::sqrt(d);
        for (size_t r = c + 1; r < n; ++r) {
            double v = G[r][c];
            for (size_t k = 0; k < c; ++k) v -= G[r][k] * G[c][k];
            G[r][c] = v / G[c][c];
        }
    }
    return true;
}

}  // namespace oracles
