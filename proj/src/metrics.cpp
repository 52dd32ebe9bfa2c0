#include "glassbox/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "glassbox/errors.hpp"

namespace glassbox {

using nlohmann::json;

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    hits += o.hits;
    correct_rejections += o.correct_rejections;
    false_alarms += o.false_alarms;
    misses += o.misses;
    return *this;
}

ConfusionCounts confusion(const ChannelGrid& pred, const ChannelGrid& labels, double threshold) {
    if (!pred.same_shape(labels)) throw ValidationError("prediction and label grids differ in shape");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool predicted = pred.values[i] >= threshold;
        const bool observed = labels.values[i] > 0.5;
        if (predicted && observed) {
            ++c.hits;
        } else if (predicted) {
            ++c.false_alarms;
        } else if (observed) {
            ++c.misses;
        } else {
            ++c.correct_rejections;
        }
    }
    if (c.total() != pred.values.size()) throw std::logic_error("confusion counts do not sum to the pixel count");
    return c;
}

SkillScores skill_scores(const ConfusionCounts& c) {
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    SkillScores s;
    s.pod = ratio(c.hits, c.hits + c.misses);
    s.far = ratio(c.false_alarms, c.hits + c.false_alarms);
    s.csi = ratio(c.hits, c.hits + c.false_alarms + c.misses);
    s.base_rate = ratio(c.hits + c.misses, c.total());
    return s;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ValidationError("roc_auc needs one label per score");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos = 0.0, neg = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]]) {
                rank_sum += mid_rank;
                pos += 1.0;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) throw ValidationError("roc_auc needs both classes");
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::vector<int> connected_components(const ChannelGrid& grid, int* count) {
    std::vector<int> ids(grid.values.size(), -1);
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < ids.size(); ++start) {
        if (grid.values[start] <= 0.5 || ids[start] >= 0) continue;
        ids[start] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            const auto r = static_cast<long>(cur / grid.cols), c = static_cast<long>(cur % grid.cols);
            for (long dr = -1; dr <= 1; ++dr) {
                for (long dc = -1; dc <= 1; ++dc) {
                    const long rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(grid.rows) || cc >= static_cast<long>(grid.cols)) continue;
                    const auto k = static_cast<std::size_t>(rr) * grid.cols + static_cast<std::size_t>(cc);
                    if (grid.values[k] > 0.5 && ids[k] < 0) {
                        ids[k] = next;
                        stack.push_back(k);
                    }
                }
            }
        }
        ++next;
    }
    if (count) *count = next;
    return ids;
}

double component_overlap(const ChannelGrid& pred, const ChannelGrid& labels, double threshold) {
    if (!pred.same_shape(labels)) throw ValidationError("prediction and label grids differ in shape");
    int n = 0;
    auto ids = connected_components(labels, &n);
    if (n == 0) return 1.0;
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= 0 && pred.values[i] >= threshold) hit[static_cast<std::size_t>(ids[i])] = true;
    }
    return static_cast<double>(std::count(hit.begin(), hit.end(), true)) / n;
}

json to_json(const ConfusionCounts& c) {
    return json{{"hits", c.hits},
                {"correct_rejections", c.correct_rejections},
                {"false_alarms", c.false_alarms},
                {"misses", c.misses},
                {"total", c.total()}};
}

json to_json(const SkillScores& s) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"label", "convection-proxy"},
                {"pod", opt(s.pod)},
                {"far", opt(s.far)},
                {"csi", opt(s.csi)},
                {"base_rate", opt(s.base_rate)}};
}

json to_json(const EvaluationReport& r) {
    json per_scene = json::array();
    for (const auto& s : r.per_scene) per_scene.push_back(json{{"scene_id", s.scene_id}, {"counts", to_json(s.counts)}});
    return json{{"threshold", r.threshold},
                {"counts", to_json(r.counts)},
                {"scores", to_json(skill_scores(r.counts))},
                {"per_scene", std::move(per_scene)}};
}

}  // namespace glassbox
