#pragma once

#include <filesystem>
#include <vector>

#include "glassbox/grid.hpp"

namespace glassbox {

struct LoadOptions {
    // Replace NaN samples with the mean of the channel's finite samples
    // instead of rejecting the bundle.
    bool impute_nan = false;
};

// A scene bundle is a directory holding manifest.json and one headerless
// little-endian float32 file per channel (row-major). Values are narrowed to
// float32 on save, so a round trip is exact for float32-representable data.
Scene load_scene(const std::filesystem::path& dir, const LoadOptions& options = {});
void save_scene(const Scene& scene, const std::filesystem::path& dir);

// Subdirectories of `root` that contain a manifest.json, sorted by name.
std::vector<std::filesystem::path> list_scene_bundles(const std::filesystem::path& root);
std::vector<Scene> load_scenes(const std::filesystem::path& root, const LoadOptions& options = {});

// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace glassbox
