#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glassbox/grid.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

inline constexpr const char* kProbabilityChannel = "probability";
inline constexpr const char* kPredictionChannel = "prediction";

// Importance grids (one per term), probability and binary prediction grids
// for one featurized scene, in emission order.
std::vector<ChannelGrid> prediction_maps(const EbmModel& model, const Scene& scene, double threshold);

struct EmitOptions {
    double threshold = 0.5;
    // Also write one PPM image per grid.
    bool render = false;
};

// Writes prediction_maps() as a scene bundle in `out_dir`; returns the paths
// written.
std::vector<std::filesystem::path> emit_maps(const EbmModel& model, const Scene& scene,
                                             const std::filesystem::path& out_dir, const EmitOptions& options = {});

// Binary PPM with a diverging palette: negative red, zero white, positive
// blue, scaled by the largest magnitude. Probability grids are centred on 0.5.
std::string render_ppm(const ChannelGrid& grid, double center = 0.0);

}  // namespace glassbox
