#include "glassbox/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <iomanip>

#include "glassbox/errors.hpp"

namespace glassbox {

using nlohmann::json;

std::vector<std::string> default_feature_names() {
    return {kBrightnessFeature, kCoolContrastFeature, kInfraredFeature};
}

void FeatureConfig::validate() const {
    if (blur_window < 1 || blur_window % 2 == 0) throw ConfigError("blur_window must be odd and >= 1");
    if (downsample_factor < 1) throw ConfigError("downsample_factor must be >= 1");
    if (glcm_tile < 2) throw ConfigError("glcm_tile must be >= 2");
    if (glcm_levels < 1) throw ConfigError("glcm_levels must be >= 1");
    if (!(quantize_lo < quantize_hi)) throw ConfigError("quantize_lo must be below quantize_hi");
    if (contrast_norm_max && !(*contrast_norm_max > 0.0)) {
        throw ConfigError("contrast_norm_max must be > 0 once fit (all training tiles were constant?)");
    }
}

void to_json(json& j, const FeatureConfig& cfg) {
    j = json{{"blur_window", cfg.blur_window},
             {"downsample_factor", cfg.downsample_factor},
             {"glcm_tile", cfg.glcm_tile},
             {"glcm_levels", cfg.glcm_levels},
             {"quantize_lo", cfg.quantize_lo},
             {"quantize_hi", cfg.quantize_hi},
             {"cold_threshold_K", cfg.cold_threshold_k},
             {"contrast_norm_max", cfg.contrast_norm_max ? json(*cfg.contrast_norm_max) : json(nullptr)},
             {"sza_cutoff_deg", cfg.sza_cutoff_deg}};
}

void from_json(const json& j, FeatureConfig& cfg) {
    FeatureConfig d;
    cfg.blur_window = j.value("blur_window", d.blur_window);
    cfg.downsample_factor = j.value("downsample_factor", d.downsample_factor);
    cfg.glcm_tile = j.value("glcm_tile", d.glcm_tile);
    cfg.glcm_levels = j.value("glcm_levels", d.glcm_levels);
    cfg.quantize_lo = j.value("quantize_lo", d.quantize_lo);
    cfg.quantize_hi = j.value("quantize_hi", d.quantize_hi);
    cfg.cold_threshold_k = j.value("cold_threshold_K", d.cold_threshold_k);
    cfg.contrast_norm_max.reset();
    if (j.contains("contrast_norm_max") && !j["contrast_norm_max"].is_null()) {
        cfg.contrast_norm_max = j["contrast_norm_max"].get<double>();
    }
    cfg.sza_cutoff_deg = j.value("sza_cutoff_deg", d.sza_cutoff_deg);
}

std::string config_hash(const FeatureConfig& cfg) {
    std::string text = json(cfg).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

ChannelGrid box_blur(const ChannelGrid& grid, int window) {
    if (window < 1 || window % 2 == 0) throw ConfigError("box_blur window must be odd, got " + std::to_string(window));
    if (static_cast<std::size_t>(window) > std::min(grid.rows, grid.cols)) {
        throw ConfigError("box_blur window exceeds the grid size");
    }
    const long half = window / 2;
    const auto rows = static_cast<long>(grid.rows);
    const auto cols = static_cast<long>(grid.cols);

    // Separable: clamp-to-edge padding factorizes per axis.
    std::vector<double> horizontal(grid.values.size());
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (long k = -half; k <= half; ++k) {
                long cc = std::clamp(c + k, 0L, cols - 1);
                sum += grid.values[static_cast<std::size_t>(r * cols + cc)];
            }
            horizontal[static_cast<std::size_t>(r * cols + c)] = sum;
        }
    }
    std::vector<double> out(grid.values.size());
    const double area = static_cast<double>(window) * window;
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (long k = -half; k <= half; ++k) {
                long rr = std::clamp(r + k, 0L, rows - 1);
                sum += horizontal[static_cast<std::size_t>(rr * cols + c)];
            }
            out[static_cast<std::size_t>(r * cols + c)] = sum / area;
        }
    }
    return grid.like(grid.name, grid.units, std::move(out));
}

ChannelGrid downsample_nn(const ChannelGrid& grid, int factor) {
    if (factor < 1) throw ConfigError("downsample factor must be >= 1");
    const auto f = static_cast<std::size_t>(factor);
    if (grid.rows % f != 0 || grid.cols % f != 0) {
        throw ConfigError("downsample factor " + std::to_string(factor) + " does not divide " +
                          std::to_string(grid.rows) + "x" + std::to_string(grid.cols));
    }
    ChannelGrid out(grid.name, grid.rows / f, grid.cols / f, grid.resolution_km * factor, grid.units);
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) = grid.at(r * f, c * f);
    }
    return out;
}

ChannelGrid brightness_feature(const ChannelGrid& visible, const FeatureConfig& cfg) {
    auto out = downsample_nn(box_blur(visible, cfg.blur_window), cfg.downsample_factor);
    out.name = kBrightnessFeature;
    out.units = "reflectance";
    return out;
}

ChannelGrid contrast_tiles(const ChannelGrid& visible, const FeatureConfig& cfg) {
    const auto tile = static_cast<std::size_t>(cfg.glcm_tile);
    if (cfg.glcm_tile < 2) throw ConfigError("glcm_tile must be >= 2");
    if (visible.rows % tile != 0 || visible.cols % tile != 0) {
        throw ConfigError("glcm_tile does not divide the visible grid");
    }
    LevelGrid levels = quantize(visible, cfg.glcm_levels, cfg.quantize_lo, cfg.quantize_hi);
    ChannelGrid out("contrast", visible.rows / tile, visible.cols / tile, visible.resolution_km * cfg.glcm_tile,
                    "unitless");
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            out.at(r, c) = contrast(compute_glcm(levels.tile(r * tile, c * tile, tile), cfg.glcm_levels));
        }
    }
    return out;
}

ChannelGrid cool_contrast_feature(const ChannelGrid& visible, const ChannelGrid& infrared, const FeatureConfig& cfg) {
    if (!cfg.contrast_norm_max) throw StateError("contrast_norm_max is not fit; run featurize in training mode first");
    if (!(*cfg.contrast_norm_max > 0.0)) throw ConfigError("contrast_norm_max must be > 0");
    if (visible.rows != infrared.rows * cfg.glcm_tile || visible.cols != infrared.cols * cfg.glcm_tile) {
        throw ValidationError("visible grid must be glcm_tile times the infrared grid");
    }
    ChannelGrid raw = contrast_tiles(visible, cfg);
    const double denom = std::log1p(*cfg.contrast_norm_max);
    ChannelGrid out = infrared.like(kCoolContrastFeature, "unitless", std::vector<double>(infrared.size(), 0.0));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (infrared.values[i] <= cfg.cold_threshold_k) {
            out.values[i] = std::clamp(std::log1p(raw.values[i]) / denom, 0.0, 1.0);
        }
    }
    return out;
}

double fit_contrast_norm(std::span<const Scene> scenes, const FeatureConfig& cfg) {
    if (scenes.empty()) throw ValidationError("fit_contrast_norm needs at least one scene");
    double best = 0.0;
    for (const auto& scene : scenes) {
        auto raw = contrast_tiles(scene.channel(kVisibleChannel), cfg);
        for (double v : raw.values) best = std::max(best, v);
    }
    if (best <= 0.0) warn("every training tile has zero contrast; the cool contrast feature cannot be normalized");
    return best;
}

ChannelGrid infrared_feature(const ChannelGrid& infrared) {
    auto [lo, hi] = std::minmax_element(infrared.values.begin(), infrared.values.end());
    if (lo != infrared.values.end() && (*lo < 150.0 || *hi > 350.0)) {
        warn("infrared channel '" + infrared.name + "' has values outside [150, 350] K");
    }
    ChannelGrid out = infrared;
    out.name = kInfraredFeature;
    out.units = "K";
    return out;
}

bool is_convective(PrecipCategory category) {
    return category == PrecipCategory::Convection || category == PrecipCategory::Hail ||
           category == PrecipCategory::TropicalConvectiveRain;
}

PrecipCategory precip_category(double code) {
    if (std::isfinite(code) && code == std::trunc(code) && std::abs(code) < 1000.0) {
        switch (static_cast<int>(code)) {
            case -3: case 0: case 1: case 3: case 6: case 7: case 10: case 91: case 96:
                return static_cast<PrecipCategory>(static_cast<int>(code));
            default:
                break;
        }
    }
    std::ostringstream ss;
    ss << "unknown PrecipFlag category code " << code
       << " (known: -3, 0, 1, 3, 6, 7, 10, 91, 96)";
    throw ValidationError(ss.str());
}

ChannelGrid derive_labels(const ChannelGrid& precip_flag, const ChannelGrid& infrared, const FeatureConfig& cfg) {
    if (precip_flag.rows % infrared.rows != 0 || precip_flag.cols % infrared.cols != 0 ||
        precip_flag.rows / infrared.rows != precip_flag.cols / infrared.cols) {
        throw ValidationError("precip_flag grid is not an integer multiple of the infrared grid");
    }
    const int factor = static_cast<int>(precip_flag.rows / infrared.rows);
    ChannelGrid coarse = downsample_nn(precip_flag, factor);
    // Unknown codes anywhere in the input are an error, not only at kept pixels.
    for (double v : precip_flag.values) precip_category(v);
    ChannelGrid out = infrared.like(kLabelChannel, "binary", std::vector<double>(infrared.size(), 0.0));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        bool convective = is_convective(precip_category(coarse.values[i]));
        out.values[i] = (convective && infrared.values[i] <= cfg.cold_threshold_k) ? 1.0 : 0.0;
    }
    return out;
}

std::vector<Scene> sza_filter(std::vector<Scene> scenes, double cutoff_deg) {
    std::vector<Scene> kept;
    kept.reserve(scenes.size());
    for (auto& scene : scenes) {
        if (!scene.solar_zenith_deg) {
            warn("scene '" + scene.scene_id + "' has no solar zenith angle; keeping it");
            kept.push_back(std::move(scene));
        } else if (*scene.solar_zenith_deg <= cutoff_deg) {
            kept.push_back(std::move(scene));
        }
    }
    return kept;
}

double reflectance_from_radiance(double radiance, double kappa, double solar_zenith_deg) {
    if (!(solar_zenith_deg >= 0.0 && solar_zenith_deg < 90.0)) {
        throw ValidationError("solar zenith angle must be in [0, 90) degrees");
    }
    double mu = std::cos(solar_zenith_deg * std::numbers::pi / 180.0);
    return radiance * kappa / mu;
}

Scene featurize_scene(const Scene& raw, const FeatureConfig& cfg) {
    cfg.validate();
    const auto& visible = raw.channel(kVisibleChannel);
    const auto& infrared = raw.channel(kInfraredChannel);

    Scene out;
    out.scene_id = raw.scene_id;
    out.timestamp = raw.timestamp;
    out.solar_zenith_deg = raw.solar_zenith_deg;

    auto brightness = brightness_feature(visible, cfg);
    if (!brightness.same_shape(infrared)) {
        throw ValidationError("scene '" + raw.scene_id + "': downsampled visible grid does not match infrared grid");
    }
    out.add(std::move(brightness));
    out.add(cool_contrast_feature(visible, infrared, cfg));
    out.add(infrared_feature(infrared));

    if (raw.has_channel(kPrecipFlagChannel)) {
        out.labels = derive_labels(raw.channel(kPrecipFlagChannel), infrared, cfg);
    } else if (raw.labels && raw.labels->same_shape(infrared)) {
        out.labels = *raw.labels;
        out.labels->name = kLabelChannel;
    }
    out.validate();
    return out;
}

}  // namespace glassbox
