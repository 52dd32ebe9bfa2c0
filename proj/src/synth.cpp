#include "glassbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "glassbox/errors.hpp"
#include "glassbox/featurize.hpp"
#include "glassbox/random.hpp"

namespace glassbox {

using nlohmann::json;

void SynthSpec::validate() const {
    if (coarse_size < 16) throw ConfigError("synth coarse_size must be >= 16");
    if (visible_factor < 1 || precip_factor < 1) throw ConfigError("synth grid factors must be >= 1");
    if (ot_count && (*ot_count < 0 || *ot_count > 6)) throw ConfigError("synth ot_count must be in [0, 6]");
    if (min_ots < 0 || max_ots < min_ots || max_ots > 6) throw ConfigError("synth needs 0 <= min_ots <= max_ots <= 6");
    if (!(coarse_resolution_km > 0.0)) throw ConfigError("synth coarse_resolution_km must be > 0");
}

void to_json(json& j, const SynthSpec& spec) {
    j = json{{"coarse_size", spec.coarse_size},
             {"coarse_resolution_km", spec.coarse_resolution_km},
             {"visible_factor", spec.visible_factor},
             {"precip_factor", spec.precip_factor},
             {"ot_count", spec.ot_count ? json(*spec.ot_count) : json(nullptr)},
             {"min_ots", spec.min_ots},
             {"max_ots", spec.max_ots},
             {"shadows", spec.shadows},
             {"warm_convection", spec.warm_convection},
             {"solar_zenith_deg", spec.solar_zenith_deg ? json(*spec.solar_zenith_deg) : json(nullptr)},
             {"scene_id", spec.scene_id}};
}

void from_json(const json& j, SynthSpec& spec) {
    SynthSpec d;
    spec.coarse_size = j.value("coarse_size", d.coarse_size);
    spec.coarse_resolution_km = j.value("coarse_resolution_km", d.coarse_resolution_km);
    spec.visible_factor = j.value("visible_factor", d.visible_factor);
    spec.precip_factor = j.value("precip_factor", d.precip_factor);
    spec.ot_count.reset();
    if (j.contains("ot_count") && !j["ot_count"].is_null()) spec.ot_count = j["ot_count"].get<int>();
    spec.min_ots = j.value("min_ots", d.min_ots);
    spec.max_ots = j.value("max_ots", d.max_ots);
    spec.shadows = j.value("shadows", d.shadows);
    spec.warm_convection = j.value("warm_convection", d.warm_convection);
    spec.solar_zenith_deg.reset();
    if (j.contains("solar_zenith_deg") && !j["solar_zenith_deg"].is_null()) {
        spec.solar_zenith_deg = j["solar_zenith_deg"].get<double>();
    }
    spec.scene_id = j.value("scene_id", d.scene_id);
}

namespace {

struct Anvil {
    double cy, cx, ry, rx, temperature;
    // Normalized elliptical radius squared; <= 1 inside.
    double q(double y, double x) const {
        double dy = (y - cy) / ry;
        double dx = (x - cx) / rx;
        return dy * dy + dx * dx;
    }
    // 1 deep inside, ramping to 0 just outside the ellipse.
    double weight(double y, double x) const { return std::clamp((1.3 - q(y, x)) / 0.3, 0.0, 1.0); }
};

struct Overshoot {
    double cy, cx;
    double core_radius;
    double depth_k;
    int code;  // Convection or TropicalConvectiveRain

    double bump_radius() const { return 2.0 * core_radius; }
    double distance(double y, double x) const { return std::hypot(y - cy, x - cx); }
};

struct Blob {
    double cy, cx, r;
    bool contains(double y, double x) const { return std::hypot(y - cy, x - cx) <= r; }
};

struct Layout {
    Anvil anvil;
    std::vector<Overshoot> ots;
    std::vector<Blob> shadows;
    std::optional<Blob> warm_convection;
    Blob snow;
    double ground_k;
};

Layout make_layout(const SynthSpec& spec, int n_ots, Rng& rng) {
    const double n = static_cast<double>(spec.coarse_size);
    Layout layout{};
    layout.ground_k = rng.uniform(285.0, 300.0);
    layout.anvil = Anvil{rng.uniform(0.35 * n, 0.65 * n), rng.uniform(0.35 * n, 0.65 * n),
                         rng.uniform(0.27 * n, 0.34 * n), rng.uniform(0.27 * n, 0.34 * n),
                         rng.uniform(214.0, 222.0)};

    for (int k = 0; k < n_ots; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
            double y = rng.uniform(0.0, n);
            double x = rng.uniform(0.0, n);
            if (layout.anvil.q(y, x) > 0.5) continue;
            bool clear = std::all_of(layout.ots.begin(), layout.ots.end(), [&](const Overshoot& o) {
                return std::hypot(o.cy - y, o.cx - x) >= 0.125 * n;
            });
            if (!clear) continue;
            Overshoot ot{y, x, rng.uniform(1.6, 2.4), rng.uniform(17.0, 23.0),
                         rng.bernoulli(0.25) ? static_cast<int>(PrecipCategory::TropicalConvectiveRain)
                                             : static_cast<int>(PrecipCategory::Convection)};
            layout.ots.push_back(ot);
            placed = true;
        }
        if (!placed) throw ValidationError("synth could not place " + std::to_string(n_ots) + " overshooting tops");
    }

    // Sun from one side for the whole scene; shadows fall opposite OTs.
    double sun = rng.uniform(0.0, 2.0 * std::numbers::pi);
    if (spec.shadows) {
        for (const auto& ot : layout.ots) {
            double off = 1.7 * ot.bump_radius();
            layout.shadows.push_back({ot.cy + off * std::sin(sun), ot.cx + off * std::cos(sun), 1.2 * ot.core_radius});
        }
    }
    auto far_from_anvil = [&](double y, double x) { return layout.anvil.q(y, x) > 1.8; };
    if (spec.warm_convection) {
        for (int attempt = 0; attempt < 20000; ++attempt) {
            double y = rng.uniform(0.0, n);
            double x = rng.uniform(0.0, n);
            if (far_from_anvil(y, x)) {
                layout.warm_convection = Blob{y, x, rng.uniform(1.5, 3.0)};
                break;
            }
        }
    }
    layout.snow = Blob{rng.uniform(0.0, n), rng.uniform(0.0, n), rng.uniform(1.0, 2.5)};
    return layout;
}

}  // namespace

Scene synth_scene(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(derive_seed(seed, "synth-layout"));
    int n_ots = spec.ot_count ? *spec.ot_count
                              : spec.min_ots + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_ots - spec.min_ots + 1)));
    Layout layout = make_layout(spec, n_ots, rng);

    const std::size_t n = spec.coarse_size;
    Scene scene;
    scene.scene_id = spec.scene_id.empty() ? "synth-" + std::to_string(seed) : spec.scene_id;
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "2024-06-%02dT%02d:%02d:00Z", 1 + static_cast<int>(seed % 28),
                      14 + static_cast<int>((seed / 28) % 9), static_cast<int>(15 * ((seed / 252) % 4)));
        scene.timestamp = buf;
    }
    scene.solar_zenith_deg = spec.solar_zenith_deg;
    if (!scene.solar_zenith_deg) scene.solar_zenith_deg = Rng(derive_seed(seed, "synth-sza")).uniform(20.0, 60.0);

    auto ot_drop = [&](double y, double x) {
        double drop = 0.0;
        for (const auto& ot : layout.ots) {
            double t = ot.distance(y, x) / ot.bump_radius();
            drop = std::max(drop, ot.depth_k * std::max(0.0, 1.0 - t * t));
        }
        return drop;
    };

    // Infrared, coarse grid.
    Rng ir_rng(derive_seed(seed, "synth-ir"));
    ChannelGrid ir(kInfraredChannel, n, n, spec.coarse_resolution_km, "K");
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double y = static_cast<double>(r), x = static_cast<double>(c);
            double w = layout.anvil.weight(y, x);
            double t = layout.ground_k + w * (layout.anvil.temperature - layout.ground_k);
            ir.at(r, c) = t - ot_drop(y, x) + 0.7 * ir_rng.normal();
        }
    }

    // Visible reflectance, fine grid.
    Rng vis_rng(derive_seed(seed, "synth-visible"));
    const std::size_t nv = n * static_cast<std::size_t>(spec.visible_factor);
    const double vf = spec.visible_factor;
    ChannelGrid vis(kVisibleChannel, nv, nv, spec.coarse_resolution_km / vf, "reflectance");
    for (std::size_t i = 0; i < nv; ++i) {
        for (std::size_t j = 0; j < nv; ++j) {
            double y = static_cast<double>(i) / vf, x = static_cast<double>(j) / vf;
            double ground = 0.06 + 0.05 * vis_rng.uniform();
            double anvil = 0.80 + 0.008 * vis_rng.normal();
            double w = layout.anvil.weight(y, x);
            double v = ground + w * (anvil - ground);
            for (const auto& ot : layout.ots) {
                double d = ot.distance(y, x);
                double t = d / ot.bump_radius();
                if (t < 1.0) v += 0.08 * (1.0 - t * t);
                if (d <= 1.25 * ot.core_radius) v += 0.18 * (2.0 * vis_rng.uniform() - 1.0);
            }
            for (const auto& sh : layout.shadows) {
                if (sh.contains(y, x)) v *= 0.25;
            }
            vis.at(i, j) = std::clamp(v, 0.0, 1.6);
        }
    }

    // PrecipFlag, intermediate grid.
    Rng pf_rng(derive_seed(seed, "synth-precip"));
    const std::size_t np = n * static_cast<std::size_t>(spec.precip_factor);
    const double pf = spec.precip_factor;
    ChannelGrid flag(kPrecipFlagChannel, np, np, spec.coarse_resolution_km / pf, "category");
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = 0; j < np; ++j) {
            double y = static_cast<double>(i) / pf, x = static_cast<double>(j) / pf;
            double q = layout.anvil.q(y, x);
            int code = static_cast<int>(PrecipCategory::NoPrecip);
            if (q <= 1.0) {
                code = static_cast<int>(PrecipCategory::CoolStratiformRain);
            } else if (q <= 1.5 && pf_rng.bernoulli(0.3)) {
                code = static_cast<int>(PrecipCategory::WarmStratiformRain);
            }
            if (layout.snow.contains(y, x)) code = static_cast<int>(PrecipCategory::Snow);
            if (layout.warm_convection && layout.warm_convection->contains(y, x)) {
                code = static_cast<int>(PrecipCategory::Convection);
            }
            for (const auto& ot : layout.ots) {
                double d = ot.distance(y, x);
                if (d <= ot.core_radius) code = ot.code;
                if (d <= 0.5 * ot.core_radius) code = static_cast<int>(PrecipCategory::Hail);
            }
            flag.at(i, j) = code;
        }
    }

    FeatureConfig label_cfg;
    scene.labels = derive_labels(flag, ir, label_cfg);
    scene.add(std::move(vis));
    scene.add(std::move(ir));
    scene.add(std::move(flag));
    scene.validate();
    return scene;
}

}  // namespace glassbox
