#include <doctest.h>

#include <set>

#include "glassbox/errors.hpp"
#include "glassbox/featurize.hpp"
#include "glassbox/glcm.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/synth.hpp"
#include "support.hpp"

using namespace glassbox;

namespace {

std::vector<std::vector<int>> random_tile(Rng& rng, int n, int levels) {
    std::vector<std::vector<int>> t(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
    for (auto& row : t)
        for (auto& v : row) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(levels)));
    return t;
}

FeatureConfig fitted_config(double norm_max = 10.0) {
    FeatureConfig cfg;
    cfg.contrast_norm_max = norm_max;
    return cfg;
}

struct WarningCapture {
    std::vector<std::string> messages;
    WarningHandler previous;
    WarningCapture() {
        previous = set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
    }
    ~WarningCapture() { set_warning_handler(previous); }
};

}  // namespace

TEST_CASE("box blur") {
    Rng rng(10);
    SUBCASE("constant grid stays constant") {
        auto g = testing::constant_grid("v", 20, 20, 0.37);
        auto b = box_blur(g, 9);
        for (double v : b.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
    }
    SUBCASE("impulse at the centre of a 9x9 grid spreads to 1/81 everywhere") {
        ChannelGrid g("v", 9, 9, 1.0);
        g.at(4, 4) = 1.0;
        auto b = box_blur(g, 9);
        auto oracle = testing::naive_blur(g, 9);
        for (std::size_t i = 0; i < b.size(); ++i) {
            CHECK(b.values[i] == doctest::Approx(1.0 / 81.0).epsilon(1e-12));
            CHECK(std::abs(b.values[i] - oracle.values[i]) < 1e-12);
        }
    }
    SUBCASE("random grid matches the sliding window oracle") {
        for (int window : {1, 3, 5, 9}) {
            auto g = testing::random_grid("v", 32, 32, rng);
            auto b = box_blur(g, window);
            auto oracle = testing::naive_blur(g, window);
            for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(std::abs(b.values[i] - oracle.values[i]) < 1e-12);
        }
    }
    SUBCASE("even window is a config error") {
        auto g = testing::constant_grid("v", 8, 8, 1.0);
        CHECK_THROWS_AS(box_blur(g, 4), ConfigError);
    }
}

TEST_CASE("nearest-neighbour downsample") {
    ChannelGrid g("v", 8, 8, 0.5);
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = static_cast<double>(i);
    auto d = downsample_nn(g, 4);
    REQUIRE(d.rows == 2);
    CHECK(d.values == std::vector<double>{g.at(0, 0), g.at(0, 4), g.at(4, 0), g.at(4, 4)});
    CHECK(d.resolution_km == 2.0);
    CHECK(downsample_nn(g, 1) == g);
    CHECK_THROWS_AS(downsample_nn(g, 3), ConfigError);

    auto big = ChannelGrid("v", 256, 256, 0.5);
    auto small = downsample_nn(big, 4);
    CHECK(small.rows == 64);
    CHECK(small.cols == 64);
    CHECK(small.resolution_km == 2.0);
}

TEST_CASE("brightness feature") {
    Rng rng(11);
    auto cfg = fitted_config();
    auto constant = testing::constant_grid("visible", 256, 256, 0.8, 0.5);
    auto b = brightness_feature(constant, cfg);
    CHECK(b.rows == 64);
    CHECK(b.cols == 64);
    for (double v : b.values) CHECK(v == doctest::Approx(0.8).epsilon(1e-14));

    auto g = testing::random_grid("visible", 64, 64, rng, 0, 1, 0.5);
    auto got = brightness_feature(g, cfg);
    auto blurred = testing::naive_blur(g, 9);
    for (std::size_t r = 0; r < got.rows; ++r)
        for (std::size_t c = 0; c < got.cols; ++c) REQUIRE(std::abs(got.at(r, c) - blurred.at(4 * r, 4 * c)) < 1e-12);
}

TEST_CASE("quantize") {
    ChannelGrid g("v", 1, 4, 1.0, "", {0.0, 1.0, 0.5, 2.0});
    auto q = quantize(g, 16, 0.0, 1.0);
    CHECK(q.levels == std::vector<int>{0, 15, 8, 15});
    ChannelGrid neg("v", 1, 1, 1.0, "", {-0.3});
    CHECK(quantize(neg, 16, 0.0, 1.0).levels[0] == 0);

    Rng rng(12);
    auto u = testing::random_grid("v", 200, 200, rng);
    auto qu = quantize(u, 16, 0.0, 1.0);
    std::vector<int> hist(16, 0);
    for (int l : qu.levels) ++hist[static_cast<std::size_t>(l)];
    for (int h : hist) CHECK(std::abs(h - 2500) < 250);
}

TEST_CASE("GLCM against pair enumeration") {
    SUBCASE("constant tile puts all mass on one diagonal entry") {
        std::vector<std::vector<int>> t(4, std::vector<int>(4, 5));
        auto m = compute_glcm(testing::to_level_grid(t), 16);
        CHECK(m(5, 5) == 1.0);
        CHECK(contrast(m) == 0.0);
    }
    SUBCASE("alternating columns") {
        std::vector<std::vector<int>> t(4, std::vector<int>{0, 1, 0, 1});
        auto m = compute_glcm(testing::to_level_grid(t), 2);
        auto oracle = testing::brute_glcm(t, 2);
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(m.p[k] - oracle[k]) < 1e-15);
    }
    SUBCASE("random tiles are symmetric, normalized and match the oracle") {
        Rng rng(13);
        for (int k = 0; k < 200; ++k) {
            const int n = 2 + static_cast<int>(rng.below(6));
            auto t = random_tile(rng, n, 16);
            auto m = compute_glcm(testing::to_level_grid(t), 16);
            auto oracle = testing::brute_glcm(t, 16);
            double sum = 0.0;
            for (int i = 0; i < 16; ++i) {
                for (int j = 0; j < 16; ++j) {
                    REQUIRE(std::abs(m(i, j) - oracle[static_cast<std::size_t>(i * 16 + j)]) < 1e-15);
                    REQUIRE(m(i, j) == m(j, i));
                    sum += m(i, j);
                }
            }
            REQUIRE(std::abs(sum - 1.0) < 1e-12);
            const double c = contrast(m);
            REQUIRE(c >= 0.0);
            REQUIRE(std::abs(c - testing::brute_contrast(t)) < 1e-12);
        }
    }
    SUBCASE("tile smaller than 2x2 is rejected") {
        std::vector<std::vector<int>> t{{1}};
        CHECK_THROWS_AS(compute_glcm(testing::to_level_grid(t), 4), ValidationError);
    }
}

TEST_CASE("contrast of a half/half off-diagonal matrix is 1") {
    GlcmMatrix m{2, {0.0, 0.5, 0.5, 0.0}};
    CHECK(contrast(m) == 1.0);
}

TEST_CASE("contrast is zero exactly for tiles constant after quantization") {
    Rng rng(14);
    for (int k = 0; k < 100; ++k) {
        auto t = random_tile(rng, 4, 3);
        bool constant = true;
        for (auto& row : t)
            for (int v : row) constant &= v == t[0][0];
        CHECK((contrast(compute_glcm(testing::to_level_grid(t), 3)) == 0.0) == constant);
    }
}

TEST_CASE("cool contrast mask and normalization") {
    auto cfg = fitted_config();
    // 2x2 coarse grid; each coarse pixel owns one 4x4 visible tile of alternating columns.
    ChannelGrid visible("visible", 8, 8, 0.5);
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) visible.at(r, c) = (c % 2) ? 0.99 : 0.0;
    const double raw = contrast_tiles(visible, cfg).values[0];
    REQUIRE(raw > 0.0);
    ChannelGrid ir("infrared", 2, 2, 2.0, "K", {251.0, 250.0, 249.0, 300.0});
    cfg.contrast_norm_max = raw;
    auto out = cool_contrast_feature(visible, ir, cfg);
    CHECK(out.values[0] == 0.0);  // warm tile
    CHECK(out.values[1] == 1.0);  // exactly 250 K is kept; raw == max maps to 1
    CHECK(out.values[2] == 1.0);
    CHECK(out.values[3] == 0.0);

    cfg.contrast_norm_max = raw / 4.0;  // raw above the training max clips to 1
    CHECK(cool_contrast_feature(visible, ir, cfg).values[1] == 1.0);

    auto flat = testing::constant_grid("visible", 8, 8, 0.4, 0.5);
    CHECK(cool_contrast_feature(flat, ir, cfg).values[1] == 0.0);

    FeatureConfig unfit;
    CHECK_THROWS_AS(cool_contrast_feature(visible, ir, unfit), StateError);
}

TEST_CASE("fit_contrast_norm takes the max over scenes") {
    Rng rng(15);
    FeatureConfig cfg;
    std::vector<Scene> scenes(2);
    double best = 0.0;
    for (auto& s : scenes) {
        s.scene_id = "s";
        s.add(testing::random_grid("visible", 16, 16, rng, 0, 1, 0.5));
        for (double v : contrast_tiles(s.channel("visible"), cfg).values) best = std::max(best, v);
    }
    double first = 0.0;
    for (double v : contrast_tiles(scenes[0].channel("visible"), cfg).values) first = std::max(first, v);
    CHECK(fit_contrast_norm(std::span<const Scene>(scenes.data(), 1), cfg) == first);
    CHECK(fit_contrast_norm(scenes, cfg) == best);

    WarningCapture w;
    std::vector<Scene> flat(1);
    flat[0].add(testing::constant_grid("visible", 16, 16, 0.5, 0.5));
    CHECK(fit_contrast_norm(flat, cfg) == 0.0);
    CHECK(w.messages.size() == 1);
    cfg.contrast_norm_max = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("infrared feature passes values through") {
    WarningCapture w;
    auto g = testing::constant_grid("infrared", 64, 64, 250.0, 2.0);
    auto f = infrared_feature(g);
    CHECK(f.values == g.values);
    CHECK(f.rows == 64);
    CHECK(w.messages.empty());
    Rng rng(16);
    auto typical = testing::random_grid("infrared", 16, 16, rng, 180, 320, 2.0);
    CHECK(infrared_feature(typical).values == typical.values);
    auto odd = testing::constant_grid("infrared", 2, 2, 30.0);
    CHECK(infrared_feature(odd).values == odd.values);
    CHECK(w.messages.size() == 1);
}

TEST_CASE("derive_labels") {
    FeatureConfig cfg;
    auto labels_for = [&](double code, double ir) {
        ChannelGrid flag("precip_flag", 2, 2, 1.0);
        std::fill(flag.values.begin(), flag.values.end(), code);
        ChannelGrid infrared("infrared", 1, 1, 2.0, "K", {ir});
        return derive_labels(flag, infrared, cfg).values[0];
    };
    CHECK(labels_for(3, 200) == 0.0);   // snow
    CHECK(labels_for(6, 260) == 0.0);   // warm convection
    CHECK(labels_for(7, 240) == 1.0);   // cold hail
    CHECK(labels_for(96, 250) == 1.0);  // inclusive threshold
    CHECK(labels_for(6, 250.0001) == 0.0);
    CHECK(labels_for(10, 220) == 0.0);
    CHECK(labels_for(-3, 220) == 0.0);
    CHECK_THROWS_AS(labels_for(42, 220), ValidationError);

    // Downsampling picks the top-left PrecipFlag pixel of each block.
    ChannelGrid flag("precip_flag", 4, 4, 1.0);
    flag.at(0, 2) = 6;
    flag.at(1, 1) = 6;
    ChannelGrid infrared("infrared", 2, 2, 2.0, "K", {200, 200, 200, 200});
    CHECK(derive_labels(flag, infrared, cfg).values == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("precip categories") {
    CHECK(is_convective(precip_category(6)));
    CHECK(is_convective(precip_category(7)));
    CHECK(is_convective(precip_category(96)));
    for (double c : {-3.0, 0.0, 1.0, 3.0, 10.0, 91.0}) CHECK_FALSE(is_convective(precip_category(c)));
    CHECK_THROWS_AS(precip_category(6.5), ValidationError);
    CHECK_THROWS_AS(precip_category(std::nan("")), ValidationError);
}

TEST_CASE("solar zenith filter") {
    WarningCapture w;
    auto with = [](std::optional<double> sza) {
        Scene s;
        s.scene_id = sza ? std::to_string(*sza) : "none";
        s.solar_zenith_deg = sza;
        return s;
    };
    auto kept = sza_filter({with(70.0), with(65.0), with(10.0), with(std::nullopt)}, 65.0);
    REQUIRE(kept.size() == 3);
    CHECK(*kept[0].solar_zenith_deg == 65.0);
    CHECK_FALSE(kept[2].solar_zenith_deg.has_value());
    CHECK(w.messages.size() == 1);
    CHECK(sza_filter({}, 65.0).empty());
}

TEST_CASE("reflectance from radiance") {
    CHECK(reflectance_from_radiance(2.0, 0.5, 0.0) == doctest::Approx(1.0));
    CHECK(reflectance_from_radiance(1.0, 1.0, 60.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(reflectance_from_radiance(1.0, 1.0, 90.0), ValidationError);
}

TEST_CASE("feature config JSON and hash") {
    FeatureConfig cfg;
    cfg.contrast_norm_max = 12.5;
    nlohmann::json j = cfg;
    CHECK(j.contains("cold_threshold_K"));
    CHECK(j.get<FeatureConfig>() == cfg);
    CHECK(config_hash(cfg) == config_hash(j.get<FeatureConfig>()));
    auto other = cfg;
    other.blur_window = 7;
    CHECK(config_hash(cfg) != config_hash(other));
    CHECK(config_hash(cfg).size() == 16);
    other.blur_window = 8;
    CHECK_THROWS_AS(other.validate(), ConfigError);
}

TEST_CASE("synthetic scenes") {
    SynthSpec spec;
    SUBCASE("fixed seed is bit-identical") { CHECK(synth_scene(spec, 7) == synth_scene(spec, 7)); }
    SUBCASE("different seeds differ") { CHECK_FALSE(synth_scene(spec, 7) == synth_scene(spec, 8)); }
    SUBCASE("zero OTs give no labels") {
        spec.ot_count = 0;
        auto s = synth_scene(spec, 3);
        REQUIRE(s.labels);
        for (double v : s.labels->values) CHECK(v == 0.0);
    }
    SUBCASE("three OTs give three label components") {
        spec.ot_count = 3;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto s = synth_scene(spec, seed);
            int n = 0;
            connected_components(*s.labels, &n);
            REQUIRE(n == 3);
        }
    }
    SUBCASE("featurized scene has coarse features and labels") {
        auto s = synth_scene(spec, 5);
        CHECK(s.channel("visible").rows == 4 * s.channel("infrared").rows);
        auto cfg = fitted_config(fit_contrast_norm(std::span<const Scene>(&s, 1), FeatureConfig{}));
        auto f = featurize_scene(s, cfg);
        for (const auto& name : default_feature_names()) CHECK(f.channel(name).rows == 64);
        REQUIRE(f.labels);
        CHECK(*f.labels == *s.labels);
        for (std::size_t i = 0; i < f.labels->size(); ++i) {
            if (f.channel("infrared").values[i] > 250.0) REQUIRE(f.channel("cool_contrast").values[i] == 0.0);
        }
    }
}
