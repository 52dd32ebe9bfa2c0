#include <doctest.h>

#include <httplib.h>

#include "glassbox/edit.hpp"
#include "glassbox/model_json.hpp"
#include "glassbox/service.hpp"
#include "support.hpp"

using namespace glassbox;
using nlohmann::json;

namespace {

const std::vector<std::string> kFeatures{"brightness", "cool_contrast", "infrared"};

struct Fixture {
    Rng rng{70};
    std::unique_ptr<ModelStore> store;
    ApiHandler handler;

    static std::unique_ptr<ModelStore> make(Rng& rng) {
        auto s = std::make_unique<ModelStore>(testing::random_model(rng, kFeatures));
        Scene scene;
        scene.scene_id = "scene-a";
        for (const auto& f : kFeatures) scene.add(testing::random_grid(f, 16, 16, rng, -4, 4, 2.0));
        ChannelGrid labels("labels", 16, 16, 2.0);
        for (auto& v : labels.values) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
        scene.labels = labels;
        s->register_scene(scene);
        Scene bare;
        bare.scene_id = "scene-b";
        for (const auto& f : kFeatures) bare.add(testing::random_grid(f, 16, 16, rng, -4, 4, 2.0));
        s->register_scene(bare);
        return s;
    }

    Fixture() : store(make(rng)), handler(*store) {}

    ApiResponse get(const std::string& path, std::map<std::string, std::string> query = {}) const {
        return handler.handle({"GET", path, std::move(query), ""});
    }
    ApiResponse post(const std::string& path, const json& body) const {
        return handler.handle({"POST", path, {}, body.dump()});
    }
};

json flatten_brightness() {
    return json::array({json{{"kind", "flatten_range"}, {"term", "brightness"}, {"range", {nullptr, 0.0}},
                             {"value", "min_in_range"}}});
}

}  // namespace

TEST_CASE("model and term reads") {
    Fixture f;
    auto r = f.get("/api/model/1");
    CHECK(r.status == 200);
    CHECK(deserialize(r.body) == f.store->get(1));

    auto terms = json::parse(f.get("/api/model/1/terms").body);
    CHECK(terms["terms"].size() == 6);
    CHECK(terms["terms"][3]["kind"] == "2d");

    const auto model = f.store->get(1);
    auto t = f.get("/api/model/1/terms/infrared");
    CHECK(t.status == 200);
    CHECK(t.body == to_json(model.terms1d[2]).dump());
    CHECK(term1d_from_json(json::parse(t.body)) == model.terms1d[2]);
    auto p = f.get("/api/model/1/terms/brightness:infrared");
    CHECK(p.status == 200);
    CHECK(p.body == to_json(model.terms2d[1]).dump());

    CHECK(f.get("/api/model/9").status == 404);
    CHECK(f.get("/api/model/9/terms").status == 404);
    CHECK(f.get("/api/model/1/terms/nope").status == 404);
    CHECK(f.get("/api/model/abc").status == 400);
    CHECK(f.get("/api/nothing").status == 404);
    CHECK(f.get("/api/model/head").status == 200);
    CHECK(json::parse(f.get("/api/head").body)["version"] == 1);
    CHECK(json::parse(f.get("/api/scenes").body).size() == 2);
}

TEST_CASE("edits create versions with optimistic concurrency") {
    Fixture f;
    auto r = f.post("/api/model/1/edits", flatten_brightness());
    REQUIRE(r.status == 200);
    auto j = json::parse(r.body);
    CHECK(j["version"] == 2);
    for (const auto& d : j["diff"]) CHECK(d["term"] == "brightness");
    CHECK(f.store->head() == 2);
    CHECK(f.store->get(2).terms1d[0].edited_mask[0]);

    CHECK(f.post("/api/model/1/edits", flatten_brightness()).status == 409);
    CHECK(f.post("/api/model/2/edits", json::array()).status == 400);
    CHECK(f.post("/api/model/2/edits", json::array({json{{"kind", "twist"}, {"term", "brightness"}}})).status == 400);
    CHECK(f.post("/api/model/2/edits", json::array({json{{"kind", "shift"}, {"term", "zzz"}}})).status == 400);
    CHECK(f.handler.handle({"POST", "/api/model/2/edits", {}, "{not json"}).status == 400);
    CHECK(f.post("/api/model/7/edits", flatten_brightness()).status == 404);
    CHECK(f.store->head() == 2);
    CHECK(f.post("/api/model/2/edits", json{{"ops", flatten_brightness()}}).status == 200);
}

TEST_CASE("predict and importance") {
    Fixture f;
    json req{{"version", 1}, {"scene_id", "scene-a"}, {"threshold", 0.5}};
    auto a = f.post("/api/predict", req);
    REQUIRE(a.status == 200);
    CHECK(f.post("/api/predict", req).body == a.body);
    auto j = json::parse(a.body);
    CHECK(j["probability"]["rows"] == 16);
    CHECK(j["probability"]["values"].size() == 256);
    CHECK(j["prediction"]["values"].size() == 256);
    CHECK(j["confusion"]["counts"]["total"] == 256);
    auto bare = json::parse(f.post("/api/predict", json{{"version", 1}, {"scene_id", "scene-b"}}).body);
    CHECK(bare["confusion"].is_null());

    CHECK(f.post("/api/predict", json{{"version", 1}, {"scene_id", "nope"}}).status == 404);
    CHECK(f.post("/api/predict", json{{"version", 5}, {"scene_id", "scene-a"}}).status == 404);
    CHECK(f.post("/api/predict", json{{"version", 1}, {"scene_id", "scene-a"}, {"threshold", 1.5}}).status == 400);

    const auto model = f.store->get(1);
    const auto scene = f.store->scene("scene-a");
    auto imp = f.get("/api/importance", {{"version", "1"}, {"scene_id", "scene-a"}, {"term", "cool_contrast:infrared"}});
    REQUIRE(imp.status == 200);
    auto grid = json::parse(imp.body)["grid"];
    CHECK(grid["values"].get<std::vector<double>>() ==
          importance_map(model, "cool_contrast:infrared", scene_feature_grids(*scene)).values);
    CHECK(f.get("/api/importance", {{"version", "1"}, {"scene_id", "scene-a"}, {"term", "bogus"}}).status == 400);
    CHECK(f.get("/api/importance", {{"version", "1"}, {"scene_id", "zzz"}, {"term", "infrared"}}).status == 404);
    CHECK(f.get("/api/importance", {{"version", "1"}, {"term", "infrared"}}).status == 400);
}

TEST_CASE("predictions change only where edited bins apply") {
    Fixture f;
    auto edit = json::array({json{{"kind", "shift"}, {"term", "infrared"}, {"range", {-1.0, 1.0}}, {"delta", 0.75}}});
    REQUIRE(f.post("/api/model/1/edits", edit).status == 200);
    auto before = json::parse(f.post("/api/predict", json{{"version", 1}, {"scene_id", "scene-a"}}).body);
    auto after = json::parse(f.post("/api/predict", json{{"version", 2}, {"scene_id", "scene-a"}}).body);
    const auto model = f.store->get(2);
    const auto& term = model.terms1d[2];
    const auto& ir = f.store->scene("scene-a")->channel("infrared");
    for (std::size_t i = 0; i < ir.size(); ++i) {
        const bool edited = term.edited_mask[term.bins.bin_index(ir.values[i])];
        const double pb = before["probability"]["values"][i], pa = after["probability"]["values"][i];
        if (edited) {
            CHECK(std::abs(logit(pa) - logit(pb) - 0.75) < 1e-9);
        } else {
            CHECK(pa == pb);
        }
    }
}

TEST_CASE("live HTTP server") {
    Fixture f;
    ApiServer server(*f.store, ServerOptions{"127.0.0.1", 0, "*"});
    const int port = server.bind();
    server.start();
    httplib::Client cli("127.0.0.1", port);

    auto r = cli.Get("/api/model/1/terms");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(json::parse(r->body)["terms"].size() == 6);

    auto opt = cli.Options("/api/model/1/edits");
    REQUIRE(opt);
    CHECK(opt->status == 204);
    CHECK(opt->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    auto e = cli.Post("/api/model/1/edits", flatten_brightness().dump(), "application/json");
    REQUIRE(e);
    CHECK(e->status == 200);
    auto stale = cli.Post("/api/model/1/edits", flatten_brightness().dump(), "application/json");
    REQUIRE(stale);
    CHECK(stale->status == 409);

    auto term = cli.Get("/api/model/2/terms/cool_contrast%3Ainfrared");
    REQUIRE(term);
    CHECK(term->status == 200);
    CHECK(term->body == to_json(f.store->get(2).terms2d[2]).dump());

    auto imp = cli.Get("/api/importance?version=2&scene_id=scene-a&term=brightness");
    REQUIRE(imp);
    CHECK(imp->status == 200);
    CHECK(cli.Get("/api/model/77")->status == 404);
    server.stop();
}
