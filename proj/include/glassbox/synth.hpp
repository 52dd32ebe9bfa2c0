#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "glassbox/grid.hpp"

namespace glassbox {

// Parameters of the synthetic storm-scene generator. Geometry is laid out on
// the coarse (infrared) grid; the visible grid is visible_factor times finer
// and the PrecipFlag grid precip_factor times finer.
struct SynthSpec {
    std::size_t coarse_size = 64;
    double coarse_resolution_km = 2.0;
    int visible_factor = 4;
    int precip_factor = 2;
    // Fixed overshooting-top count; drawn from [min_ots, max_ots] when unset.
    std::optional<int> ot_count;
    int min_ots = 1;
    int max_ots = 4;
    bool shadows = true;
    bool warm_convection = true;
    // Drawn from [20, 60] degrees when unset.
    std::optional<double> solar_zenith_deg;
    std::string scene_id;  // "synth-<seed>" when empty

    void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);

// Deterministic scene with channels visible (reflectance), infrared (K),
// precip_flag (category codes) and binary labels on the coarse grid marking
// cold convective overshooting-top cores.
Scene synth_scene(const SynthSpec& spec, std::uint64_t seed);

}  // namespace glassbox
