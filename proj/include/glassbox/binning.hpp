#pragma once

#include <span>

#include "glassbox/model.hpp"

namespace glassbox {

// Quantile cut points over the sorted values, snapped to the nearest boundary
// between distinct values; edges sit halfway between neighbouring distinct
// values. At most max_bins bins; a constant column gets no edges.
BinEdges quantile_bins(std::span<const double> values, int max_bins);

}  // namespace glassbox
