#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "glassbox/glcm.hpp"
#include "glassbox/grid.hpp"
#include "glassbox/model.hpp"
#include "glassbox/random.hpp"

namespace testing {

using namespace glassbox;

inline ChannelGrid random_grid(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng, double lo = 0.0,
                               double hi = 1.0, double res = 1.0) {
    ChannelGrid g(name, rows, cols, res);
    for (auto& v : g.values) v = rng.uniform(lo, hi);
    return g;
}

inline ChannelGrid constant_grid(const std::string& name, std::size_t rows, std::size_t cols, double value,
                                 double res = 1.0) {
    ChannelGrid g(name, rows, cols, res);
    std::fill(g.values.begin(), g.values.end(), value);
    return g;
}

// Sliding-window mean with explicit index clamping.
inline ChannelGrid naive_blur(const ChannelGrid& g, int window) {
    ChannelGrid out = g;
    const long h = window / 2;
    const long R = static_cast<long>(g.rows), C = static_cast<long>(g.cols);
    for (long r = 0; r < R; ++r) {
        for (long c = 0; c < C; ++c) {
            double s = 0.0;
            for (long dr = -h; dr <= h; ++dr) {
                for (long dc = -h; dc <= h; ++dc) {
                    long rr = std::min(std::max(r + dr, 0L), R - 1);
                    long cc = std::min(std::max(c + dc, 0L), C - 1);
                    s += g.values[static_cast<std::size_t>(rr * C + cc)];
                }
            }
            out.values[static_cast<std::size_t>(r * C + c)] = s / static_cast<double>(window * window);
        }
    }
    return out;
}

// Every ordered pair of 8-neighbours inside the tile, counted into a matrix.
inline std::vector<double> brute_glcm(const std::vector<std::vector<int>>& tile, int levels) {
    std::vector<double> m(static_cast<std::size_t>(levels * levels), 0.0);
    double pairs = 0.0;
    const int n = static_cast<int>(tile.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            for (int r2 = 0; r2 < n; ++r2)
                for (int c2 = 0; c2 < n; ++c2) {
                    if (r == r2 && c == c2) continue;
                    if (std::abs(r - r2) > 1 || std::abs(c - c2) > 1) continue;
                    m[static_cast<std::size_t>(tile[r][c] * levels + tile[r2][c2])] += 1.0;
                    pairs += 1.0;
                }
    for (auto& v : m) v /= pairs;
    return m;
}

// Mean squared gray-level difference over the same ordered pairs.
inline double brute_contrast(const std::vector<std::vector<int>>& tile) {
    double s = 0.0, pairs = 0.0;
    const int n = static_cast<int>(tile.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    int r2 = r + dr, c2 = c + dc;
                    if (r2 < 0 || c2 < 0 || r2 >= n || c2 >= n) continue;
                    double d = tile[r][c] - tile[r2][c2];
                    s += d * d;
                    pairs += 1.0;
                }
    return s / pairs;
}

inline LevelGrid to_level_grid(const std::vector<std::vector<int>>& tile) {
    LevelGrid g;
    g.rows = tile.size();
    g.cols = tile.size();
    for (const auto& row : tile) g.levels.insert(g.levels.end(), row.begin(), row.end());
    return g;
}

inline BinEdges random_edges(Rng& rng, std::size_t count, double lo = -3.0, double hi = 3.0) {
    std::vector<double> e;
    for (std::size_t i = 0; i < count; ++i) e.push_back(rng.uniform(lo, hi));
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return BinEdges{e};
}

// Random valid model over the named features with every pair present.
inline EbmModel random_model(Rng& rng, const std::vector<std::string>& features, bool pairs = true) {
    EbmModel m;
    m.intercept = rng.uniform(-3.0, 3.0);
    for (const auto& f : features) {
        Term1D t;
        t.feature = f;
        t.bins = random_edges(rng, 1 + rng.below(12));
        for (std::size_t b = 0; b < t.bins.bin_count(); ++b) {
            t.scores.push_back(rng.uniform(-2.0, 2.0));
            t.error_bars.push_back(rng.uniform(0.0, 0.3));
            t.edited_mask.push_back(false);
        }
        m.terms1d.push_back(std::move(t));
    }
    if (pairs) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            for (std::size_t j = i + 1; j < features.size(); ++j) {
                Term2D t;
                t.feature_x = features[i];
                t.feature_y = features[j];
                t.bins_x = random_edges(rng, 1 + rng.below(5));
                t.bins_y = random_edges(rng, 1 + rng.below(5));
                const auto cells = t.bins_x.bin_count() * t.bins_y.bin_count();
                for (std::size_t k = 0; k < cells; ++k) t.scores.push_back(rng.uniform(-1.0, 1.0));
                t.edited_mask.assign(cells, false);
                m.terms2d.push_back(std::move(t));
            }
        }
    }
    m.validate();
    return m;
}

// Bin lookup by scanning the edges, independent of BinEdges::bin_index.
inline std::size_t scan_bin(const std::vector<double>& edges, double x) {
    std::size_t b = 0;
    while (b < edges.size() && x > edges[b]) ++b;
    return b;
}

inline double oracle_logit(const EbmModel& m, const FeatureVector& x) {
    double s = m.intercept;
    for (const auto& t : m.terms1d) s += t.scores[scan_bin(t.bins.edges, x.at(t.feature))];
    for (const auto& t : m.terms2d) {
        auto bx = scan_bin(t.bins_x.edges, x.at(t.feature_x));
        auto by = scan_bin(t.bins_y.edges, x.at(t.feature_y));
        s += t.scores[bx * t.bins_y.bin_count() + by];
    }
    return s;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("glassbox-test-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) : path(temp_dir(tag)) {}
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testing
