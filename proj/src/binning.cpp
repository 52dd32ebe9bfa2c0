#include "glassbox/binning.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "glassbox/errors.hpp"

namespace glassbox {

BinEdges quantile_bins(std::span<const double> values, int max_bins) {
    if (values.empty()) throw ValidationError("quantile_bins needs at least one value");
    if (max_bins < 1) throw ConfigError("max_bins must be >= 1");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw ValidationError("quantile_bins needs finite values");
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    // Positions i (1..n-1) where sorted[i-1] < sorted[i].
    std::vector<std::size_t> boundaries;
    for (std::size_t i = 1; i < n; ++i) {
        if (sorted[i - 1] < sorted[i]) boundaries.push_back(i);
    }
    BinEdges out;
    if (boundaries.empty()) return out;
    auto push_edge = [&](std::size_t i) {
        double e = sorted[i - 1] + (sorted[i] - sorted[i - 1]) / 2.0;
        if (out.edges.empty() || out.edges.back() < e) out.edges.push_back(e);
    };

    const auto bins = static_cast<std::size_t>(max_bins);
    if (boundaries.size() < bins) {
        for (auto i : boundaries) push_edge(i);
        return out;
    }
    std::size_t last = 0;
    for (std::size_t k = 1; k < bins; ++k) {
        std::size_t target = (k * n) / bins;
        auto it = std::lower_bound(boundaries.begin(), boundaries.end(), target);
        std::size_t pick;
        if (it == boundaries.end()) {
            pick = boundaries.back();
        } else if (it == boundaries.begin()) {
            pick = *it;
        } else {
            std::size_t above = *it;
            std::size_t below = *(it - 1);
            pick = (target - below <= above - target) ? below : above;
        }
        if (pick <= last) continue;
        last = pick;
        push_edge(pick);
    }
    return out;
}

}  // namespace glassbox
