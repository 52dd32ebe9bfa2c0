// Command-line front end: one subcommand per pipeline stage.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glassbox/edit.hpp"
#include "glassbox/emit.hpp"
#include "glassbox/errors.hpp"
#include "glassbox/featurize.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/model_json.hpp"
#include "glassbox/model_store.hpp"
#include "glassbox/parallel.hpp"
#include "glassbox/random.hpp"
#include "glassbox/scene_io.hpp"
#include "glassbox/service.hpp"
#include "glassbox/synth.hpp"
#include "glassbox/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace glassbox;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Options {
    std::string config;
    std::uint64_t seed = 42;
    double threshold = 0.5;
    int jobs = default_jobs();
    std::string out;
    std::string in;
    std::string model;
    std::string ops;
    std::string store;
    std::string scenes;
    std::string bind = "127.0.0.1:8080";
    int n = 1;
    bool fit_norm = false;
    bool render = false;
    bool impute_nan = false;
};

json read_json_file(const std::string& path) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string fnv_hash(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Collects the run manifest fields while a command runs.
struct Manifest {
    explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

    std::string command;
    json config_hashes = json::object();
    json inputs = json::array();
    json outputs = json::array();
    std::optional<std::uint64_t> seed;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::string started_at = utc_now();

    void write(const fs::path& out_dir) const {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j{{"command", command},         {"config_hashes", config_hashes},
               {"inputs", inputs},           {"outputs", outputs},
               {"seed", seed ? json(*seed) : json(nullptr)},
               {"tool_version", kToolVersion}, {"started_at", started_at},
               {"wall_time_s", wall}};
        write_file_atomic(out_dir / "run_manifest.json", j.dump(2) + "\n");
    }
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

EbmModel load_model(const std::string& path) { return deserialize(read_text_file(path)); }

std::vector<Scene> load_scene_dir(const Options& o, const std::string& dir) {
    auto scenes = load_scenes(dir, LoadOptions{o.impute_nan});
    if (scenes.empty()) throw ValidationError("no scene bundles under " + dir);
    return scenes;
}

int cmd_synth(const Options& o) {
    Manifest m("synth");
    m.seed = o.seed;
    SynthSpec spec;
    if (!o.config.empty()) {
        spec = read_json_file(o.config).get<SynthSpec>();
        m.inputs.push_back(o.config);
    }
    spec.validate();
    m.config_hashes["synth"] = fnv_hash(json(spec).dump());
    if (o.n < 1) throw ValidationError("--n must be >= 1");
    const fs::path out = o.out;
    ensure_dir(out);
    std::vector<std::string> names(static_cast<std::size_t>(o.n));
    parallel_for(names.size(), o.jobs, [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene-%05zu", i);
        auto s = spec;
        if (s.scene_id.empty()) s.scene_id = name;
        else s.scene_id += "-" + std::string(name);
        save_scene(synth_scene(s, derive_seed(o.seed, static_cast<std::uint64_t>(i))), out / name);
        names[i] = name;
    });
    for (const auto& n : names) m.outputs.push_back((out / n).string());
    m.write(out);
    std::cout << "wrote " << o.n << " scenes to " << out.string() << "\n";
    return 0;
}

int cmd_featurize(const Options& o) {
    Manifest m("featurize");
    FeatureConfig cfg;
    if (!o.config.empty()) {
        cfg = read_json_file(o.config).get<FeatureConfig>();
        m.inputs.push_back(o.config);
    }
    cfg.validate();
    auto raw = sza_filter(load_scene_dir(o, o.in), cfg.sza_cutoff_deg);
    m.inputs.push_back(o.in);
    if (raw.empty()) throw ValidationError("every scene was removed by the solar zenith filter");
    if (o.fit_norm || !cfg.contrast_norm_max) cfg.contrast_norm_max = fit_contrast_norm(raw, cfg);
    m.config_hashes["feature_config"] = config_hash(cfg);
    const fs::path out = o.out;
    ensure_dir(out);
    parallel_for(raw.size(), o.jobs, [&](std::size_t i) {
        save_scene(featurize_scene(raw[i], cfg), out / raw[i].scene_id);
    });
    write_file_atomic(out / "feature_config.json", json(cfg).dump(2) + "\n");
    for (const auto& s : raw) m.outputs.push_back((out / s.scene_id).string());
    m.outputs.push_back((out / "feature_config.json").string());
    m.write(out);
    std::cout << "featurized " << raw.size() << " scenes into " << out.string() << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    Manifest m("train");
    TrainConfig cfg;
    if (!o.config.empty()) {
        cfg = read_json_file(o.config).get<TrainConfig>();
        m.inputs.push_back(o.config);
    }
    cfg.seed = o.seed;
    cfg.jobs = o.jobs;
    cfg.validate();
    m.seed = cfg.seed;
    m.config_hashes["train"] = fnv_hash(json(cfg).dump());
    auto scenes = load_scene_dir(o, o.in);
    m.inputs.push_back(o.in);
    std::string feature_ref;
    const auto fc_path = fs::path(o.in) / "feature_config.json";
    if (fs::exists(fc_path)) {
        feature_ref = config_hash(read_json_file(fc_path.string()).get<FeatureConfig>());
        m.config_hashes["feature_config"] = feature_ref;
    }
    const auto table = flatten_scenes(scenes, default_feature_names(), kLabelChannel);
    auto result = fit(table, cfg);
    result.model.feature_config_ref = feature_ref;
    const fs::path out = o.out;
    ensure_dir(out);
    write_file_atomic(out / "model.json", serialize(result.model));
    write_file_atomic(out / "train_report.json", to_json(result.report).dump(1) + "\n");
    m.outputs.push_back((out / "model.json").string());
    m.outputs.push_back((out / "train_report.json").string());
    m.write(out);
    std::cout << "trained on " << table.size() << " pixels; " << result.model.term_count() << " terms\n";
    return 0;
}

int cmd_predict(const Options& o) {
    Manifest m("predict");
    const auto model = load_model(o.model);
    auto scenes = load_scene_dir(o, o.in);
    m.inputs = {o.model, o.in};
    m.config_hashes["threshold"] = o.threshold;
    const fs::path out = o.out;
    ensure_dir(out);
    parallel_for(scenes.size(), o.jobs, [&](std::size_t i) {
        emit_maps(model, scenes[i], out / scenes[i].scene_id, EmitOptions{o.threshold, o.render});
    });
    for (const auto& s : scenes) m.outputs.push_back((out / s.scene_id).string());
    m.write(out);
    std::cout << "wrote prediction maps for " << scenes.size() << " scenes\n";
    return 0;
}

int cmd_edit(const Options& o) {
    Manifest m("edit");
    auto model = load_model(o.model);
    const auto ops = edit_ops_from_json(read_json_file(o.ops));
    m.inputs = {o.model, o.ops};
    for (const auto& op : ops) {
        op.validate();
    }
    for (const auto& op : ops) model = apply_edit(model, op);
    const fs::path out = o.out;
    ensure_dir(out);
    write_file_atomic(out / "model.json", serialize(model));
    m.outputs.push_back((out / "model.json").string());
    m.write(out);
    std::cout << "applied " << ops.size() << " edits; version " << model.version << "\n";
    return 0;
}

int cmd_evaluate(const Options& o) {
    Manifest m("evaluate");
    const auto model = load_model(o.model);
    auto scenes = load_scene_dir(o, o.in);
    m.inputs = {o.model, o.in};
    EvaluationReport report;
    report.threshold = o.threshold;
    report.per_scene.resize(scenes.size());
    parallel_for(scenes.size(), o.jobs, [&](std::size_t i) {
        const auto& s = scenes[i];
        const ChannelGrid* labels = s.has_channel(kLabelChannel) ? &s.channel(kLabelChannel)
                                    : s.labels                  ? &*s.labels
                                                                : nullptr;
        if (!labels) throw ValidationError("scene " + s.scene_id + " has no labels");
        const auto prob = predict_grid(model, scene_feature_grids(s));
        report.per_scene[i] = {s.scene_id, confusion(prob, *labels, o.threshold)};
    });
    for (const auto& s : report.per_scene) report.counts += s.counts;
    const fs::path out = o.out;
    ensure_dir(out);
    const auto j = to_json(report);
    write_file_atomic(out / "evaluation.json", j.dump(1) + "\n");
    m.outputs.push_back((out / "evaluation.json").string());
    m.write(out);
    std::cout << j["counts"].dump() << "\n" << j["scores"].dump() << "\n";
    return 0;
}

int cmd_serve(const Options& o) {
    std::unique_ptr<ModelStore> store;
    if (!o.store.empty()) {
        ensure_dir(o.store);
        bool has_models = false;
        for (const auto& e : fs::directory_iterator(o.store)) {
            has_models |= e.path().filename().string().rfind("model_v", 0) == 0;
        }
        if (!has_models) {
            if (o.model.empty()) throw ValidationError("store " + o.store + " is empty; pass --model to seed it");
            ModelStore seed(load_model(o.model));
            seed.persist_to(o.store);
        }
        store = std::make_unique<ModelStore>(fs::path(o.store));
    } else if (!o.model.empty()) {
        store = std::make_unique<ModelStore>(load_model(o.model));
    } else {
        throw ValidationError("serve needs --store or --model");
    }
    if (!o.scenes.empty()) {
        for (auto& s : load_scene_dir(o, o.scenes)) store->register_scene(std::move(s));
    }
    const auto colon = o.bind.rfind(':');
    if (colon == std::string::npos) throw ValidationError("--bind must be host:port");
    ServerOptions so;
    so.host = o.bind.substr(0, colon);
    try {
        so.port = std::stoi(o.bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw ValidationError("bad port in --bind " + o.bind);
    }
    ApiServer server(*store, so);
    const int port = server.bind();
    std::cout << "serving model head " << store->head() << " on http://" << so.host << ":" << port << std::endl;
    server.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glassbox: additive boosting for storm-top detection"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--impute-nan", o.impute_nan, "Replace NaN samples with the channel mean on load");
    };

    auto* synth = app.add_subcommand("synth", "Generate synthetic raw scene bundles");
    common(synth);
    synth->add_option("--n", o.n, "Number of scenes")->check(CLI::PositiveNumber);
    synth->add_option("--out", o.out, "Output directory")->required();

    auto* featurize = app.add_subcommand("featurize", "Compute feature scenes from raw bundles");
    common(featurize);
    featurize->add_option("--in", o.in, "Directory of raw scene bundles")->required();
    featurize->add_option("--out", o.out, "Output directory")->required();
    featurize->add_flag("--fit", o.fit_norm, "Refit the contrast normalizer even if the config sets it");

    auto* train = app.add_subcommand("train", "Fit a model on featurized scenes");
    common(train);
    train->add_option("--in", o.in, "Directory of featurized scene bundles")->required();
    train->add_option("--out", o.out, "Output directory")->required();

    auto* predict = app.add_subcommand("predict", "Write probability, prediction and importance maps");
    common(predict);
    predict->add_option("--model", o.model, "Model JSON")->required();
    predict->add_option("--in", o.in, "Directory of featurized scene bundles")->required();
    predict->add_option("--threshold", o.threshold, "Decision threshold on probability");
    predict->add_option("--out", o.out, "Output directory")->required();
    predict->add_flag("--render", o.render, "Also write PPM images");

    auto* edit = app.add_subcommand("edit", "Apply an ops file to a model");
    common(edit);
    edit->add_option("--model", o.model, "Model JSON")->required();
    edit->add_option("--ops", o.ops, "JSON array of edit ops")->required();
    edit->add_option("--out", o.out, "Output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Confusion counts against scene labels");
    common(evaluate);
    evaluate->add_option("--model", o.model, "Model JSON")->required();
    evaluate->add_option("--in", o.in, "Directory of featurized scene bundles")->required();
    evaluate->add_option("--threshold", o.threshold, "Decision threshold on probability");
    evaluate->add_option("--out", o.out, "Output directory")->required();

    auto* serve = app.add_subcommand("serve", "Serve the editing API");
    common(serve);
    serve->add_option("--store", o.store, "Model store directory (model_v<N>.json files)");
    serve->add_option("--model", o.model, "Initial model JSON");
    serve->add_option("--scenes", o.scenes, "Directory of featurized scenes to register");
    serve->add_option("--bind", o.bind, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (!(o.threshold > 0.0 && o.threshold < 1.0)) throw ValidationError("--threshold must be in (0, 1)");
        if (*synth) return cmd_synth(o);
        if (*featurize) return cmd_featurize(o);
        if (*train) return cmd_train(o);
        if (*predict) return cmd_predict(o);
        if (*edit) return cmd_edit(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*serve) return cmd_serve(o);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
