#include "glassbox/model_store.hpp"

#include <mutex>
#include <regex>

#include "glassbox/edit.hpp"
#include "glassbox/errors.hpp"
#include "glassbox/model_json.hpp"
#include "glassbox/scene_io.hpp"

namespace glassbox {

namespace fs = std::filesystem;

ModelStore::ModelStore(EbmModel initial) {
    initial.validate();
    auto v = initial.version;
    versions_.emplace(v, std::move(initial));
}

ModelStore::ModelStore(const fs::path& dir) : dir_(dir) {
    if (!fs::is_directory(dir)) throw IoError("model store " + dir.string() + " is not a directory");
    static const std::regex pattern(R"(model_v(\d+)\.json)");
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        auto name = entry.path().filename().string();
        if (!std::regex_match(name, m, pattern)) continue;
        auto model = deserialize(read_text_file(entry.path()));
        if (std::to_string(model.version) != m[1].str()) {
            throw ValidationError(entry.path().string() + " holds version " + std::to_string(model.version));
        }
        versions_.emplace(model.version, std::move(model));
    }
    if (versions_.empty()) throw ValidationError("model store " + dir.string() + " holds no model_v<N>.json");
    check_chain_locked();
}

fs::path ModelStore::version_path(const fs::path& dir, std::int64_t version) {
    return dir / ("model_v" + std::to_string(version) + ".json");
}

void ModelStore::check_chain_locked() const {
    for (const auto& [v, model] : versions_) {
        if (model.parent_version && !versions_.count(*model.parent_version)) {
            // Parents may predate the store (e.g. a store seeded from an edited model).
            continue;
        }
        if (model.parent_version && *model.parent_version >= v) {
            throw ValidationError("model version chain is not increasing at version " + std::to_string(v));
        }
    }
}

void ModelStore::write_locked(const EbmModel& model) const {
    if (!dir_) return;
    write_file_atomic(version_path(*dir_, model.version), serialize(model));
}

void ModelStore::persist_to(const fs::path& dir) {
    std::unique_lock lock(mutex_);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    dir_ = dir;
    for (const auto& [v, model] : versions_) write_locked(model);
}

std::int64_t ModelStore::head() const {
    std::shared_lock lock(mutex_);
    return versions_.rbegin()->first;
}

std::vector<std::int64_t> ModelStore::versions() const {
    std::shared_lock lock(mutex_);
    std::vector<std::int64_t> out;
    for (const auto& [v, m] : versions_) out.push_back(v);
    return out;
}

bool ModelStore::contains(std::int64_t version) const {
    std::shared_lock lock(mutex_);
    return versions_.count(version) != 0;
}

EbmModel ModelStore::get(std::int64_t version) const {
    std::shared_lock lock(mutex_);
    auto it = versions_.find(version);
    if (it == versions_.end()) throw NotFoundError("unknown model version " + std::to_string(version));
    return it->second;
}

EbmModel ModelStore::apply(std::int64_t expected_head, std::span<const EditOp> ops) {
    if (ops.empty()) throw ValidationError("edit list is empty");
    std::unique_lock lock(mutex_);
    const auto head = versions_.rbegin()->first;
    if (!versions_.count(expected_head)) throw NotFoundError("unknown model version " + std::to_string(expected_head));
    if (expected_head != head) {
        throw ConflictError("version " + std::to_string(expected_head) + " is stale; head is " + std::to_string(head));
    }
    // Each op produces its own version so the log stays one op per version.
    std::vector<EbmModel> produced;
    EbmModel current = versions_.at(head);
    for (const auto& op : ops) {
        current = apply_edit(current, op);
        produced.push_back(current);
    }
    for (auto& m : produced) {
        write_locked(m);
        auto v = m.version;
        versions_.emplace(v, std::move(m));
    }
    return current;
}

void ModelStore::register_scene(Scene scene) {
    scene.validate();
    std::unique_lock lock(mutex_);
    auto id = scene.scene_id;
    scenes_.insert_or_assign(std::move(id), std::make_shared<const Scene>(std::move(scene)));
}

std::shared_ptr<const Scene> ModelStore::scene(const std::string& scene_id) const {
    std::shared_lock lock(mutex_);
    auto it = scenes_.find(scene_id);
    if (it == scenes_.end()) throw NotFoundError("unknown scene '" + scene_id + "'");
    return it->second;
}

std::vector<std::string> ModelStore::scene_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : scenes_) out.push_back(id);
    return out;
}

EbmModel revert(const ModelStore& store, std::int64_t version) { return store.get(version); }

}  // namespace glassbox
