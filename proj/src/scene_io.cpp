#include "glassbox/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "glassbox/errors.hpp"

namespace glassbox {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "channel files are little-endian float32");

namespace {

std::string channel_file_name(const std::string& channel) {
    std::string out;
    for (char ch : channel) {
        bool safe = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
        out.push_back(safe ? ch : '-');
    }
    return out + ".f32";
}

json channel_entry(const ChannelGrid& grid) {
    return json{{"name", grid.name},
                {"rows", grid.rows},
                {"cols", grid.cols},
                {"resolution_km", grid.resolution_km},
                {"units", grid.units},
                {"file", channel_file_name(grid.name)}};
}

void write_channel(const ChannelGrid& grid, const fs::path& path) {
    std::vector<float> buf(grid.values.size());
    std::transform(grid.values.begin(), grid.values.end(), buf.begin(),
                   [](double v) { return static_cast<float>(v); });
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());
}

template <typename T>
T required(const json& j, const char* key, const fs::path& manifest) {
    if (!j.contains(key)) throw ParseError(manifest.string() + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(manifest.string() + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

ChannelGrid read_channel(const json& entry, const fs::path& dir, const fs::path& manifest, bool impute) {
    ChannelGrid grid;
    grid.name = required<std::string>(entry, "name", manifest);
    grid.rows = required<std::size_t>(entry, "rows", manifest);
    grid.cols = required<std::size_t>(entry, "cols", manifest);
    grid.resolution_km = required<double>(entry, "resolution_km", manifest);
    grid.units = entry.value("units", std::string{});
    auto file = required<std::string>(entry, "file", manifest);

    fs::path path = dir / file;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open channel file " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t expected = grid.rows * grid.cols * sizeof(float);
    if (bytes.size() != expected) {
        throw ParseError(path.string() + ": " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                         std::to_string(expected));
    }
    grid.values.resize(grid.rows * grid.cols);
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        float f;
        std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
        grid.values[i] = f;
    }
    if (impute) {
        double sum = 0.0;
        std::size_t n = 0;
        for (double v : grid.values) {
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        double fill = n ? sum / static_cast<double>(n) : 0.0;
        for (double& v : grid.values) {
            if (std::isnan(v)) v = fill;
        }
    }
    return grid;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Scene load_scene(const fs::path& dir, const LoadOptions& options) {
    fs::path manifest_path = dir / "manifest.json";
    std::string text = read_text_file(manifest_path);
    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(manifest_path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    if (!manifest.is_object()) throw ParseError(manifest_path.string() + ": manifest must be a JSON object");

    Scene scene;
    scene.scene_id = required<std::string>(manifest, "scene_id", manifest_path);
    scene.timestamp = manifest.value("timestamp", std::string{});
    if (manifest.contains("solar_zenith_deg") && !manifest["solar_zenith_deg"].is_null()) {
        scene.solar_zenith_deg = required<double>(manifest, "solar_zenith_deg", manifest_path);
    }
    auto channels = manifest.value("channels", json::array());
    if (!channels.is_array()) throw ParseError(manifest_path.string() + ": 'channels' must be an array");
    for (const auto& entry : channels) {
        auto grid = read_channel(entry, dir, manifest_path, options.impute_nan);
        if (scene.channels.count(grid.name)) {
            throw ValidationError(manifest_path.string() + ": duplicate channel '" + grid.name + "'");
        }
        scene.add(std::move(grid));
    }
    if (manifest.contains("labels") && !manifest["labels"].is_null()) {
        scene.labels = read_channel(manifest["labels"], dir, manifest_path, options.impute_nan);
    }
    try {
        scene.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(dir.string() + ": " + e.what());
    }
    return scene;
}

void save_scene(const Scene& scene, const fs::path& dir) {
    scene.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    json manifest{{"scene_id", scene.scene_id}, {"timestamp", scene.timestamp}};
    if (scene.solar_zenith_deg) manifest["solar_zenith_deg"] = *scene.solar_zenith_deg;
    json channels = json::array();
    for (const auto& [name, grid] : scene.channels) {
        channels.push_back(channel_entry(grid));
        write_channel(grid, dir / channel_file_name(grid.name));
    }
    manifest["channels"] = std::move(channels);
    if (scene.labels) {
        auto entry = channel_entry(*scene.labels);
        entry["file"] = "labels__" + channel_file_name(scene.labels->name);
        write_channel(*scene.labels, dir / entry["file"].get<std::string>());
        manifest["labels"] = std::move(entry);
    } else {
        manifest["labels"] = nullptr;
    }
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<fs::path> list_scene_bundles(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Scene> load_scenes(const fs::path& root, const LoadOptions& options) {
    std::vector<Scene> scenes;
    for (const auto& dir : list_scene_bundles(root)) scenes.push_back(load_scene(dir, options));
    return scenes;
}

}  // namespace glassbox
