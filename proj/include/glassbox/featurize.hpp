#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "glassbox/glcm.hpp"
#include "glassbox/grid.hpp"

namespace glassbox {

// Channel names of raw scene bundles.
inline constexpr const char* kVisibleChannel = "visible";
inline constexpr const char* kInfraredChannel = "infrared";
inline constexpr const char* kPrecipFlagChannel = "precip_flag";

// Feature names produced by featurize_scene.
inline constexpr const char* kBrightnessFeature = "brightness";
inline constexpr const char* kCoolContrastFeature = "cool_contrast";
inline constexpr const char* kInfraredFeature = "infrared";
inline constexpr const char* kLabelChannel = "labels";

std::vector<std::string> default_feature_names();

struct FeatureConfig {
    int blur_window = 9;
    int downsample_factor = 4;
    int glcm_tile = 4;
    int glcm_levels = 16;
    double quantize_lo = 0.0;
    double quantize_hi = 1.0;
    double cold_threshold_k = 250.0;
    std::optional<double> contrast_norm_max;
    double sza_cutoff_deg = 65.0;

    void validate() const;
    bool operator==(const FeatureConfig&) const = default;
};

void to_json(nlohmann::json& j, const FeatureConfig& cfg);
void from_json(const nlohmann::json& j, FeatureConfig& cfg);
// Stable 16-hex-digit FNV-1a digest of the canonical JSON form.
std::string config_hash(const FeatureConfig& cfg);

// Mean over a window x window neighbourhood, clamp-to-edge at the borders.
ChannelGrid box_blur(const ChannelGrid& grid, int window);

// out(r, c) = in(r * factor, c * factor); resolution scaled by factor.
ChannelGrid downsample_nn(const ChannelGrid& grid, int factor);

ChannelGrid brightness_feature(const ChannelGrid& visible, const FeatureConfig& cfg);

// Raw GLCM contrast of every glcm_tile x glcm_tile tile of the visible grid,
// on the coarse grid.
ChannelGrid contrast_tiles(const ChannelGrid& visible, const FeatureConfig& cfg);

// log(1+c)/log(1+max) clipped to [0,1] on tiles whose infrared value is at or
// below cold_threshold_k, 0 elsewhere. Throws StateError when
// contrast_norm_max is unset.
ChannelGrid cool_contrast_feature(const ChannelGrid& visible, const ChannelGrid& infrared,
                                  const FeatureConfig& cfg);

// Largest raw tile contrast over the scenes' visible channels (before the
// cold mask).
double fit_contrast_norm(std::span<const Scene> scenes, const FeatureConfig& cfg);

ChannelGrid infrared_feature(const ChannelGrid& infrared);

// PrecipFlag category codes.
enum class PrecipCategory : int {
    NoCoverage = -3,
    NoPrecip = 0,
    WarmStratiformRain = 1,
    Snow = 3,
    Convection = 6,
    Hail = 7,
    CoolStratiformRain = 10,
    TropicalStratiformRain = 91,
    TropicalConvectiveRain = 96,
};

bool is_convective(PrecipCategory category);
// Throws ValidationError naming the code when it is not a known category.
PrecipCategory precip_category(double code);

// 1 where the (nearest-neighbour downsampled) category is convective and the
// infrared value is at or below cold_threshold_k.
ChannelGrid derive_labels(const ChannelGrid& precip_flag, const ChannelGrid& infrared, const FeatureConfig& cfg);

// Drops scenes whose solar zenith angle is strictly above cutoff_deg; scenes
// without the metadata are kept with a warning.
std::vector<Scene> sza_filter(std::vector<Scene> scenes, double cutoff_deg);

// radiance * kappa / cos(sza). Not part of the default featurize path.
double reflectance_from_radiance(double radiance, double kappa, double solar_zenith_deg);

// Raw bundle (visible, infrared, optional precip_flag) -> coarse feature
// scene (brightness, cool_contrast, infrared, labels when derivable).
Scene featurize_scene(const Scene& raw, const FeatureConfig& cfg);

}  // namespace glassbox
