#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "glassbox/grid.hpp"

namespace glassbox {

struct ConfusionCounts {
    std::uint64_t hits = 0;
    std::uint64_t correct_rejections = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t misses = 0;

    std::uint64_t total() const { return hits + correct_rejections + false_alarms + misses; }
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    bool operator==(const ConfusionCounts&) const = default;
};

// pred >= threshold counts as a positive prediction. Throws ValidationError
// on a shape mismatch or a threshold outside (0, 1).
ConfusionCounts confusion(const ChannelGrid& pred, const ChannelGrid& labels, double threshold);

// Undefined ratios (zero denominators) are left unset.
struct SkillScores {
    std::optional<double> pod;
    std::optional<double> far;
    std::optional<double> csi;
    std::optional<double> base_rate;
};

SkillScores skill_scores(const ConfusionCounts& c);

// Area under the ROC curve with tied scores counted as half.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Connected components (8-connectivity) of the cells where grid > 0.5;
// returns one component id per cell, -1 for background.
std::vector<int> connected_components(const ChannelGrid& grid, int* count = nullptr);

// Fraction of label components containing at least one positive prediction.
double component_overlap(const ChannelGrid& pred, const ChannelGrid& labels, double threshold);

nlohmann::json to_json(const ConfusionCounts& c);
nlohmann::json to_json(const SkillScores& s);

struct SceneEvaluation {
    std::string scene_id;
    ConfusionCounts counts;
};

struct EvaluationReport {
    double threshold = 0.5;
    ConfusionCounts counts;
    std::vector<SceneEvaluation> per_scene;
};

nlohmann::json to_json(const EvaluationReport& report);

}  // namespace glassbox
