#pragma once

#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "glassbox/grid.hpp"
#include "glassbox/model_store.hpp"

namespace glassbox {

struct ApiRequest {
    std::string method;
    std::string path;  // percent-decoded
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;
};

// Routes the JSON API over a model store. Responses depend only on the store
// state and the request. Error bodies are {"error": message}.
class ApiHandler {
public:
    explicit ApiHandler(ModelStore& store) : store_(&store) {}

    ApiResponse handle(const ApiRequest& request) const;

private:
    ModelStore* store_;
};

nlohmann::json grid_to_json(const ChannelGrid& grid);

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string cors_origin = "*";
};

// HTTP binding of ApiHandler.
class ApiServer {
public:
    ApiServer(ModelStore& store, ServerOptions options);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds the socket; returns the bound port. Throws IoError on failure.
    int bind();
    // Serves until stop(); binds first if needed.
    void run();
    // Runs on a background thread and returns once the server accepts requests.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace glassbox
