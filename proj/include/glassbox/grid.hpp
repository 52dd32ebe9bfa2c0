#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace glassbox {

// A 2D raster of one physical channel, row-major.
struct ChannelGrid {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double resolution_km = 1.0;
    std::string units;
    std::vector<double> values;

    ChannelGrid() = default;
    // Zero-filled grid of the given shape.
    ChannelGrid(std::string name, std::size_t rows, std::size_t cols, double resolution_km,
                std::string units = {});
    ChannelGrid(std::string name, std::size_t rows, std::size_t cols, double resolution_km,
                std::string units, std::vector<double> values);

    std::size_t size() const { return values.size(); }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    bool same_shape(const ChannelGrid& other) const {
        return rows == other.rows && cols == other.cols;
    }

    // Checks length, resolution and NaN invariants; throws ValidationError.
    void validate() const;

    // Copy with the same shape/metadata but a different name and values.
    ChannelGrid like(std::string new_name, std::string new_units, std::vector<double> new_values) const;

    bool operator==(const ChannelGrid&) const = default;
};

struct Scene {
    std::string scene_id;
    std::string timestamp;  // ISO-8601 UTC, e.g. 2024-06-05T21:45:00Z
    std::map<std::string, ChannelGrid> channels;
    std::optional<ChannelGrid> labels;
    std::optional<double> solar_zenith_deg;

    const ChannelGrid& channel(const std::string& name) const;
    bool has_channel(const std::string& name) const { return channels.count(name) != 0; }
    void add(ChannelGrid grid);

    // Non-empty, per-channel invariants, shared shape per resolution, binary labels.
    void validate() const;

    bool operator==(const Scene&) const = default;
};

// scene is an index into PixelTable::scene_ids.
struct PixelProvenance {
    std::uint32_t scene = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    bool operator==(const PixelProvenance&) const = default;
};

// Per-pixel feature table. Values are stored column-major (one vector per
// feature); row(i) gathers a feature vector.
struct PixelTable {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> columns;
    std::vector<std::uint8_t> targets;
    std::vector<PixelProvenance> provenance;
    std::vector<std::string> scene_ids;

    std::size_t size() const { return targets.size(); }
    std::size_t feature_count() const { return feature_names.size(); }
    std::vector<double> row(std::size_t i) const;
    std::size_t feature_index(const std::string& name) const;

    void validate() const;

    // Copy with the columns reordered according to `order` (indices into
    // feature_names).
    PixelTable with_column_order(std::span<const std::size_t> order) const;
};

// One row per pixel, scenes in order, pixels row-major. The label channel is
// looked up among the channels first, then in Scene::labels.
PixelTable flatten_scenes(std::span<const Scene> scenes, const std::vector<std::string>& feature_channels,
                          const std::string& label_channel);

}  // namespace glassbox
