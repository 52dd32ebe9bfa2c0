#include "glassbox/grid.hpp"

#include <cmath>
#include <set>

#include "glassbox/errors.hpp"

namespace glassbox {

ChannelGrid::ChannelGrid(std::string name_, std::size_t rows_, std::size_t cols_, double resolution,
                         std::string units_)
    : name(std::move(name_)),
      rows(rows_),
      cols(cols_),
      resolution_km(resolution),
      units(std::move(units_)),
      values(rows_ * cols_, 0.0) {}

ChannelGrid::ChannelGrid(std::string name_, std::size_t rows_, std::size_t cols_, double resolution,
                         std::string units_, std::vector<double> values_)
    : name(std::move(name_)),
      rows(rows_),
      cols(cols_),
      resolution_km(resolution),
      units(std::move(units_)),
      values(std::move(values_)) {}

void ChannelGrid::validate() const {
    if (rows == 0 || cols == 0) throw ValidationError("channel '" + name + "' has an empty shape");
    if (values.size() != rows * cols) {
        throw ValidationError("channel '" + name + "' holds " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(rows * cols));
    }
    if (!(resolution_km > 0.0) || !std::isfinite(resolution_km)) {
        throw ValidationError("channel '" + name + "' has non-positive resolution_km");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            throw ValidationError("channel '" + name + "' contains NaN at index " + std::to_string(i));
        }
    }
}

ChannelGrid ChannelGrid::like(std::string new_name, std::string new_units, std::vector<double> new_values) const {
    return ChannelGrid(std::move(new_name), rows, cols, resolution_km, std::move(new_units), std::move(new_values));
}

const ChannelGrid& Scene::channel(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) {
        throw ValidationError("scene '" + scene_id + "' has no channel '" + name + "'");
    }
    return it->second;
}

void Scene::add(ChannelGrid grid) {
    auto key = grid.name;
    channels.insert_or_assign(std::move(key), std::move(grid));
}

void Scene::validate() const {
    if (channels.empty()) throw ValidationError("scene '" + scene_id + "' has no channels");
    std::map<double, const ChannelGrid*> by_resolution;
    for (const auto& [key, grid] : channels) {
        if (key != grid.name) throw ValidationError("channel key '" + key + "' does not match its name");
        grid.validate();
        auto [it, inserted] = by_resolution.emplace(grid.resolution_km, &grid);
        if (!inserted && !grid.same_shape(*it->second)) {
            throw ValidationError("scene '" + scene_id + "': channels '" + grid.name + "' and '" +
                                  it->second->name + "' share a resolution but not a shape");
        }
    }
    if (labels) {
        labels->validate();
        for (double v : labels->values) {
            if (v != 0.0 && v != 1.0) {
                throw ValidationError("scene '" + scene_id + "': labels must be 0 or 1");
            }
        }
    }
}

std::vector<double> PixelTable::row(std::size_t i) const {
    std::vector<double> out;
    out.reserve(columns.size());
    for (const auto& col : columns) out.push_back(col[i]);
    return out;
}

std::size_t PixelTable::feature_index(const std::string& name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        if (feature_names[j] == name) return j;
    }
    throw ValidationError("table has no feature '" + name + "'");
}

void PixelTable::validate() const {
    if (columns.size() != feature_names.size()) {
        throw ValidationError("table has " + std::to_string(columns.size()) + " columns for " +
                              std::to_string(feature_names.size()) + " feature names");
    }
    std::set<std::string> unique(feature_names.begin(), feature_names.end());
    if (unique.size() != feature_names.size()) throw ValidationError("duplicate feature names in table");
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != targets.size()) {
            throw ValidationError("feature '" + feature_names[j] + "' has a different row count than targets");
        }
    }
    for (auto t : targets) {
        if (t > 1) throw ValidationError("targets must be 0 or 1");
    }
    if (!provenance.empty() && provenance.size() != targets.size()) {
        throw ValidationError("provenance length does not match row count");
    }
}

PixelTable PixelTable::with_column_order(std::span<const std::size_t> order) const {
    if (order.size() != feature_names.size()) throw ValidationError("column order has the wrong length");
    PixelTable out;
    out.targets = targets;
    out.provenance = provenance;
    out.scene_ids = scene_ids;
    for (auto j : order) {
        out.feature_names.push_back(feature_names.at(j));
        out.columns.push_back(columns.at(j));
    }
    out.validate();
    return out;
}

namespace {

const ChannelGrid& find_label_grid(const Scene& scene, const std::string& label_channel) {
    if (auto it = scene.channels.find(label_channel); it != scene.channels.end()) return it->second;
    if (scene.labels && scene.labels->name == label_channel) return *scene.labels;
    throw ValidationError("scene '" + scene.scene_id + "' is missing label channel '" + label_channel + "'");
}

}  // namespace

PixelTable flatten_scenes(std::span<const Scene> scenes, const std::vector<std::string>& feature_channels,
                          const std::string& label_channel) {
    PixelTable table;
    table.feature_names = feature_channels;
    table.columns.resize(feature_channels.size());

    std::size_t total = 0;
    for (const auto& scene : scenes) {
        const auto& labels = find_label_grid(scene, label_channel);
        for (const auto& name : feature_channels) {
            auto it = scene.channels.find(name);
            if (it == scene.channels.end()) {
                throw ValidationError("scene '" + scene.scene_id + "' is missing channel '" + name + "'");
            }
            if (!it->second.same_shape(labels)) {
                throw ValidationError("scene '" + scene.scene_id + "': channel '" + name +
                                      "' does not match the label grid shape");
            }
        }
        total += labels.size();
    }
    for (auto& col : table.columns) col.reserve(total);
    table.targets.reserve(total);
    table.provenance.reserve(total);

    for (std::size_t s = 0; s < scenes.size(); ++s) {
        const auto& scene = scenes[s];
        table.scene_ids.push_back(scene.scene_id);
        const auto& labels = find_label_grid(scene, label_channel);
        for (std::size_t j = 0; j < feature_channels.size(); ++j) {
            const auto& grid = scene.channels.at(feature_channels[j]);
            table.columns[j].insert(table.columns[j].end(), grid.values.begin(), grid.values.end());
        }
        for (std::size_t r = 0; r < labels.rows; ++r) {
            for (std::size_t c = 0; c < labels.cols; ++c) {
                double v = labels.at(r, c);
                if (v != 0.0 && v != 1.0) {
                    throw ValidationError("scene '" + scene.scene_id + "': label values must be 0 or 1");
                }
                table.targets.push_back(static_cast<std::uint8_t>(v));
                table.provenance.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
            }
        }
    }
    return table;
}

}  // namespace glassbox
