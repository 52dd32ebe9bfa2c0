#include "glassbox/emit.hpp"

#include <algorithm>
#include <cmath>

#include "glassbox/errors.hpp"
#include "glassbox/scene_io.hpp"

namespace glassbox {

namespace fs = std::filesystem;

std::vector<ChannelGrid> prediction_maps(const EbmModel& model, const Scene& scene, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
    const auto features = scene_feature_grids(scene);
    for (const auto& name : model.feature_names()) {
        if (!features.count(name)) throw ValidationError("scene " + scene.scene_id + " lacks feature " + name);
    }
    std::vector<ChannelGrid> out;
    for (const auto& id : model.term_ids()) out.push_back(importance_map(model, id, features));
    auto prob = predict_grid(model, features);
    prob.name = kProbabilityChannel;
    std::vector<double> binary(prob.values.size());
    std::transform(prob.values.begin(), prob.values.end(), binary.begin(),
                   [&](double p) { return p >= threshold ? 1.0 : 0.0; });
    auto pred = prob.like(kPredictionChannel, "", std::move(binary));
    out.push_back(std::move(prob));
    out.push_back(std::move(pred));
    return out;
}

std::vector<fs::path> emit_maps(const EbmModel& model, const Scene& scene, const fs::path& out_dir,
                                const EmitOptions& options) {
    Scene bundle;
    bundle.scene_id = scene.scene_id;
    bundle.timestamp = scene.timestamp;
    bundle.solar_zenith_deg = scene.solar_zenith_deg;
    std::vector<fs::path> written;
    auto maps = prediction_maps(model, scene, options.threshold);
    if (options.render) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
        for (const auto& grid : maps) {
            const double center = grid.name == kProbabilityChannel ? 0.5 : 0.0;
            auto stem = grid.name;
            std::replace(stem.begin(), stem.end(), ':', '-');
            auto path = out_dir / (stem + ".ppm");
            write_file_atomic(path, render_ppm(grid, center));
            written.push_back(path);
        }
    }
    for (auto& grid : maps) bundle.add(std::move(grid));
    save_scene(bundle, out_dir);
    written.push_back(out_dir / "manifest.json");
    return written;
}

std::string render_ppm(const ChannelGrid& grid, double center) {
    double scale = 0.0;
    for (double v : grid.values) scale = std::max(scale, std::abs(v - center));
    std::string out = "P6\n" + std::to_string(grid.cols) + " " + std::to_string(grid.rows) + "\n255\n";
    out.reserve(out.size() + grid.values.size() * 3);
    for (double v : grid.values) {
        const double t = scale > 0.0 ? std::clamp((v - center) / scale, -1.0, 1.0) : 0.0;
        const auto fade = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::abs(t)))));
        const char full = static_cast<char>(255);
        if (t < 0) {
            out += full;
            out += fade;
            out += fade;
        } else {
            out += fade;
            out += fade;
            out += full;
        }
    }
    return out;
}

}  // namespace glassbox
