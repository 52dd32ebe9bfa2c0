#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "glassbox/grid.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

// Append-only map of model versions plus the scenes registered for preview.
// Reads may run concurrently; apply() is serialized.
class ModelStore {
public:
    explicit ModelStore(EbmModel initial);
    // Loads every model_v<N>.json in `dir` and persists new versions there.
    explicit ModelStore(const std::filesystem::path& dir);

    ModelStore(const ModelStore&) = delete;
    ModelStore& operator=(const ModelStore&) = delete;

    // Writes every version into `dir` and keeps persisting future ones.
    void persist_to(const std::filesystem::path& dir);

    std::int64_t head() const;
    std::vector<std::int64_t> versions() const;
    bool contains(std::int64_t version) const;
    // Throws NotFoundError for unknown versions.
    EbmModel get(std::int64_t version) const;

    // Applies ops in order on top of `expected_head` and commits the result.
    // Throws ConflictError when expected_head is no longer the head and
    // ValidationError for an empty or invalid op list.
    EbmModel apply(std::int64_t expected_head, std::span<const EditOp> ops);

    void register_scene(Scene scene);
    std::shared_ptr<const Scene> scene(const std::string& scene_id) const;
    std::vector<std::string> scene_ids() const;

    static std::filesystem::path version_path(const std::filesystem::path& dir, std::int64_t version);

private:
    void check_chain_locked() const;
    void write_locked(const EbmModel& model) const;

    mutable std::shared_mutex mutex_;
    std::map<std::int64_t, EbmModel> versions_;
    std::map<std::string, std::shared_ptr<const Scene>> scenes_;
    std::optional<std::filesystem::path> dir_;
};

// The stored model of `version`; the store is left unchanged.
EbmModel revert(const ModelStore& store, std::int64_t version);

}  // namespace glassbox
