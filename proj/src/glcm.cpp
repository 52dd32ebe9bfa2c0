#include "glassbox/glcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glassbox/errors.hpp"

namespace glassbox {

LevelGrid LevelGrid::tile(std::size_t r0, std::size_t c0, std::size_t size) const {
    if (r0 + size > rows || c0 + size > cols) throw ValidationError("tile lies outside the level grid");
    LevelGrid out{size, size, std::vector<int>(size * size)};
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) out.levels[r * size + c] = at(r0 + r, c0 + c);
    }
    return out;
}

LevelGrid quantize(const ChannelGrid& grid, int levels, double lo, double hi) {
    if (levels < 1) throw ConfigError("quantize needs at least one gray level");
    if (!(lo < hi)) throw ConfigError("quantize needs lo < hi");
    constexpr double top = 1.0 - std::numeric_limits<double>::epsilon();
    LevelGrid out{grid.rows, grid.cols, std::vector<int>(grid.values.size())};
    const double span = hi - lo;
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        double t = std::clamp((grid.values[i] - lo) / span, 0.0, top);
        out.levels[i] = std::min(static_cast<int>(std::floor(t * levels)), levels - 1);
    }
    return out;
}

GlcmMatrix compute_glcm(const LevelGrid& tile, int levels) {
    if (tile.rows < 2 || tile.cols < 2) throw ValidationError("GLCM tile must be at least 2x2");
    if (levels < 1) throw ConfigError("GLCM needs at least one gray level");
    GlcmMatrix out{levels, std::vector<double>(static_cast<std::size_t>(levels) * levels, 0.0)};

    constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    const auto rows = static_cast<long>(tile.rows);
    const auto cols = static_cast<long>(tile.cols);
    double pairs = 0.0;
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            int a = tile.levels[static_cast<std::size_t>(r * cols + c)];
            if (a < 0 || a >= levels) throw ValidationError("tile gray level out of range");
            for (const auto& off : kOffsets) {
                long rr = r + off[0];
                long cc = c + off[1];
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                int b = tile.levels[static_cast<std::size_t>(rr * cols + cc)];
                out.p[static_cast<std::size_t>(a) * levels + b] += 1.0;
                pairs += 1.0;
            }
        }
    }
    for (double& v : out.p) v /= pairs;
    return out;
}

double contrast(const GlcmMatrix& glcm) {
    double sum = 0.0;
    for (int i = 0; i < glcm.levels; ++i) {
        for (int j = 0; j < glcm.levels; ++j) {
            double d = static_cast<double>(i - j);
            sum += glcm(i, j) * d * d;
        }
    }
    return sum;
}

}  // namespace glassbox
