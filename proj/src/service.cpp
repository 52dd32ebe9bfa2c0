#include "glassbox/service.hpp"

#include <charconv>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>

#include "glassbox/edit.hpp"
#include "glassbox/emit.hpp"
#include "glassbox/errors.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/model_json.hpp"

namespace glassbox {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(path);
    while (std::getline(in, cur, '/')) {
        if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
}

std::int64_t parse_version(const std::string& text, const ModelStore& store) {
    if (text == "head") return store.head();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ValidationError("bad version '" + text + "'");
    return v;
}

std::int64_t version_field(const json& j, const ModelStore& store) {
    if (!j.contains("version") || j["version"].is_null()) return store.head();
    if (j["version"].is_string()) return parse_version(j["version"].get<std::string>(), store);
    if (!j["version"].is_number_integer()) throw ValidationError("version must be an integer");
    return j["version"].get<std::int64_t>();
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("request body is not JSON: ") + e.what());
    }
}

ApiResponse ok(const json& j) { return {200, j.dump() + "\n"}; }

ApiResponse error_response(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump() + "\n"};
}

json term_summary(const Term1D& t) {
    std::size_t edited = 0;
    for (bool b : t.edited_mask) edited += b;
    return json{{"id", t.feature},        {"kind", "1d"},          {"features", json::array({t.feature})},
                {"bins", t.scores.size()}, {"edited_bins", edited}};
}

json term_summary(const Term2D& t) {
    std::size_t edited = 0;
    for (bool b : t.edited_mask) edited += b;
    return json{{"id", pair_term_id(t.feature_x, t.feature_y)},
                {"kind", "2d"},
                {"features", json::array({t.feature_x, t.feature_y})},
                {"bins", t.scores.size()},
                {"edited_bins", edited}};
}

json diff_to_json(const std::vector<TermDiff>& diffs) {
    json out = json::array();
    for (const auto& d : diffs) {
        json bins = json::array();
        for (const auto& b : d.bins) bins.push_back(json{{"bin", b.bin}, {"before", b.score_a}, {"after", b.score_b}});
        out.push_back(json{{"term", d.term_id}, {"bins", std::move(bins)}});
    }
    return out;
}

class Router {
public:
    Router(ModelStore& store, const ApiRequest& req) : store_(store), req_(req), parts_(split_path(req.path)) {}

    ApiResponse route() {
        if (parts_.empty() || parts_[0] != "api") throw NotFoundError("no route for " + req_.path);
        const auto n = parts_.size();
        const auto& m = req_.method;
        if (n == 2 && parts_[1] == "head" && m == "GET") return ok(json{{"version", store_.head()}});
        if (n == 2 && parts_[1] == "versions" && m == "GET") return ok(json(store_.versions()));
        if (n == 2 && parts_[1] == "scenes" && m == "GET") return scenes();
        if (n == 2 && parts_[1] == "predict" && m == "POST") return predict();
        if (n == 2 && parts_[1] == "importance" && m == "GET") return importance();
        if (n >= 3 && parts_[1] == "model") {
            const auto version = parse_version(parts_[2], store_);
            if (n == 3 && m == "GET") return {200, serialize(store_.get(version))};
            if (n == 4 && parts_[3] == "terms" && m == "GET") return terms(version);
            if (n == 5 && parts_[3] == "terms" && m == "GET") return term(version, parts_[4]);
            if (n == 4 && parts_[3] == "edits" && m == "POST") return edits(version);
        }
        throw NotFoundError("no route for " + m + " " + req_.path);
    }

private:
    ApiResponse scenes() const {
        json out = json::array();
        for (const auto& id : store_.scene_ids()) {
            auto s = store_.scene(id);
            json channels = json::array();
            for (const auto& [name, grid] : s->channels) channels.push_back(name);
            out.push_back(json{{"scene_id", id},
                               {"timestamp", s->timestamp},
                               {"channels", std::move(channels)},
                               {"has_labels", s->labels.has_value() || s->has_channel("labels")}});
        }
        return ok(out);
    }

    ApiResponse terms(std::int64_t version) const {
        const auto model = store_.get(version);
        json out = json::array();
        for (const auto& t : model.terms1d) out.push_back(term_summary(t));
        for (const auto& t : model.terms2d) out.push_back(term_summary(t));
        return ok(json{{"version", version}, {"intercept", model.intercept}, {"terms", std::move(out)}});
    }

    ApiResponse term(std::int64_t version, const std::string& id) const {
        const auto model = store_.get(version);
        for (const auto& t : model.terms1d) {
            if (t.feature == id) return {200, to_json(t).dump()};
        }
        for (const auto& t : model.terms2d) {
            if (pair_term_id(t.feature_x, t.feature_y) == id) return {200, to_json(t).dump()};
        }
        throw NotFoundError("unknown term '" + id + "'");
    }

    ApiResponse edits(std::int64_t version) const {
        const auto body = parse_body(req_.body);
        const json& list = body.is_object() && body.contains("ops") ? body["ops"] : body;
        if (!list.is_array()) throw ValidationError("edit body must be an array of edit ops");
        const auto ops = edit_ops_from_json(list);
        const auto before = store_.get(version);
        for (const auto& op : ops) {
            if (!before.find_term(op.term)) throw ValidationError("edit targets unknown term '" + op.term + "'");
        }
        const auto after = store_.apply(version, ops);
        return ok(json{{"version", after.version}, {"parent_version", version}, {"diff", diff_to_json(diff(before, after))}});
    }

    ApiResponse predict() const {
        const auto body = parse_body(req_.body);
        if (!body.is_object()) throw ValidationError("predict body must be an object");
        if (!body.contains("scene_id") || !body["scene_id"].is_string()) throw ValidationError("scene_id is required");
        const auto version = version_field(body, store_);
        const double threshold = body.value("threshold", 0.5);
        const auto model = store_.get(version);
        const auto scene = store_.scene(body["scene_id"].get<std::string>());
        auto maps = prediction_maps(model, *scene, threshold);
        const auto& pred = maps[maps.size() - 1];
        const auto& prob = maps[maps.size() - 2];
        json out{{"version", version},
                 {"scene_id", scene->scene_id},
                 {"threshold", threshold},
                 {"probability", grid_to_json(prob)},
                 {"prediction", grid_to_json(pred)},
                 {"confusion", nullptr}};
        const ChannelGrid* labels = scene->has_channel("labels") ? &scene->channel("labels")
                                    : scene->labels                ? &*scene->labels
                                                                   : nullptr;
        if (labels) {
            const auto counts = confusion(prob, *labels, threshold);
            out["confusion"] = json{{"counts", to_json(counts)}, {"scores", to_json(skill_scores(counts))}};
        }
        return ok(out);
    }

    ApiResponse importance() const {
        auto need = [&](const char* key) -> const std::string& {
            auto it = req_.query.find(key);
            if (it == req_.query.end()) throw ValidationError(std::string("query parameter '") + key + "' is required");
            return it->second;
        };
        const auto scene_id = need("scene_id");
        const auto term_id = need("term");
        auto vit = req_.query.find("version");
        const auto version = vit == req_.query.end() ? store_.head() : parse_version(vit->second, store_);
        const auto model = store_.get(version);
        const auto scene = store_.scene(scene_id);
        if (!model.find_term(term_id)) throw ValidationError("unknown term '" + term_id + "'");
        const auto grid = importance_map(model, term_id, scene_feature_grids(*scene));
        return ok(json{{"version", version}, {"scene_id", scene_id}, {"term", term_id}, {"grid", grid_to_json(grid)}});
    }

    ModelStore& store_;
    const ApiRequest& req_;
    std::vector<std::string> parts_;
};

}  // namespace

json grid_to_json(const ChannelGrid& grid) {
    return json{{"name", grid.name},
                {"rows", grid.rows},
                {"cols", grid.cols},
                {"resolution_km", grid.resolution_km},
                {"units", grid.units},
                {"values", grid.values}};
}

ApiResponse ApiHandler::handle(const ApiRequest& request) const {
    try {
        return Router(*store_, request).route();
    } catch (const NotFoundError& e) {
        return error_response(404, e.what());
    } catch (const ConflictError& e) {
        return error_response(409, e.what());
    } catch (const ParseError& e) {
        return error_response(400, e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const StateError& e) {
        return error_response(400, e.what());
    } catch (const json::exception& e) {
        return error_response(400, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

struct ApiServer::Impl {
    ApiHandler handler;
    ServerOptions options;
    httplib::Server server;
    std::jthread thread;
    int port = -1;

    Impl(ModelStore& store, ServerOptions opts) : handler(store), options(std::move(opts)) {}
};

ApiServer::ApiServer(ModelStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
    auto* impl = impl_.get();
    impl->server.set_default_headers({{"Access-Control-Allow-Origin", impl->options.cors_origin},
                                      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                      {"Access-Control-Allow-Headers", "Content-Type"}});
    auto dispatch = [impl](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        auto out = impl->handler.handle(r);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    impl->server.Get(R"(/api/.*)", dispatch);
    impl->server.Post(R"(/api/.*)", dispatch);
    impl->server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
    if (impl_->port > 0) return impl_->port;
    const auto& o = impl_->options;
    int port = o.port == 0 ? impl_->server.bind_to_any_port(o.host)
                           : (impl_->server.bind_to_port(o.host, o.port) ? o.port : -1);
    if (port <= 0) throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port));
    impl_->port = port;
    return port;
}

void ApiServer::run() {
    bind();
    if (!impl_->server.listen_after_bind()) throw IoError("server stopped with an error");
}

void ApiServer::start() {
    bind();
    impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace glassbox
