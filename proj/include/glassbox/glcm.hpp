#pragma once

#include <cstddef>
#include <vector>

#include "glassbox/grid.hpp"

namespace glassbox {

// Integer gray-level raster produced by quantize().
struct LevelGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> levels;

    int at(std::size_t r, std::size_t c) const { return levels[r * cols + c]; }
    // Square window [r0, r0+size) x [c0, c0+size).
    LevelGrid tile(std::size_t r0, std::size_t c0, std::size_t size) const;
};

// Normalized gray-level co-occurrence matrix, levels x levels, row-major.
struct GlcmMatrix {
    int levels = 0;
    std::vector<double> p;

    double operator()(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

// v -> floor(clip((v - lo) / (hi - lo), 0, 1 - eps) * levels).
LevelGrid quantize(const ChannelGrid& grid, int levels, double lo, double hi);

// Co-occurrences of every pixel with each of its 8 distance-1 neighbours that
// lie inside the tile, pooled over directions and normalized to sum 1.
GlcmMatrix compute_glcm(const LevelGrid& tile, int levels);

// sum_ij p(i,j) (i-j)^2
double contrast(const GlcmMatrix& glcm);

}  // namespace glassbox
