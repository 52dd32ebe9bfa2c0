#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "glassbox/grid.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

// Order in which a boosting round visits terms. ByName makes the fitted
// model independent of table column order.
enum class CycleOrder { ByName, ByColumn };

struct TrainConfig {
    double learning_rate = 0.01;
    int outer_bags = 8;
    int max_rounds = 5000;
    int early_stop_patience = 50;
    int max_bins_1d = 256;
    int max_bins_2d = 32;
    // Unset: every pair when there are at most 4 features, else 10.
    std::optional<int> max_pairs;
    double validation_fraction = 0.15;
    int min_samples_leaf = 2;
    std::uint64_t seed = 42;
    int jobs = 1;
    CycleOrder cycle_order = CycleOrder::ByName;

    void validate() const;
    std::size_t pair_budget(std::size_t feature_count) const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct StageTrace {
    int rounds = 0;       // rounds run before stopping
    int best_round = 0;   // round whose snapshot was kept (0 = initial state)
    double best_validation_loss = 0.0;
    // Mean log-loss after each round, entry 0 being the initial state.
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
};

struct BagReport {
    int bag = 0;
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    StageTrace mains;
    StageTrace pairs;
};

struct PairRank {
    std::string feature_x;
    std::string feature_y;
    double gain = 0.0;
    bool selected = false;
};

struct TrainReport {
    std::vector<BagReport> bags;
    std::vector<PairRank> pair_ranking;
};

nlohmann::json to_json(const TrainReport& report);

struct FitResult {
    EbmModel model;
    TrainReport report;
};

// Per-bin (1D) and per-cell (2D) row counts of a table under a model's bins.
struct BinPopulations {
    std::vector<std::vector<double>> terms1d;
    std::vector<std::vector<double>> terms2d;
};

BinPopulations bin_populations(const EbmModel& model, const PixelTable& table);

// Shifts every term so its population-weighted mean score is zero; the
// intercept absorbs the shifts.
EbmModel mean_center(const EbmModel& model, const BinPopulations& populations);

// Bagged cyclic boosting of 1D terms, then pair terms on the residuals.
FitResult fit(const PixelTable& table, const TrainConfig& cfg);

// Ranks every feature pair by the best four-quadrant Newton gain of the
// residual gradient of `base_logits` (one logit per table row).
std::vector<PairRank> rank_pairs(const PixelTable& table, std::span<const double> base_logits,
                                 const TrainConfig& cfg);

// Ranks pairs, keeps the top pair_budget() and boosts them on the residuals
// of base_logits with the same bagging and early stopping as the mains.
std::vector<Term2D> fit_pairs(const PixelTable& table, std::span<const double> base_logits, const TrainConfig& cfg,
                              TrainReport* report = nullptr);

}  // namespace glassbox
