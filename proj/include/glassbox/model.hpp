#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "glassbox/edit_op.hpp"
#include "glassbox/grid.hpp"

namespace glassbox {

// K strictly increasing edges define K+1 bins
// (-inf, e0], (e0, e1], ..., (e_{K-1}, +inf).
struct BinEdges {
    std::vector<double> edges;

    std::size_t bin_count() const { return edges.size() + 1; }
    std::size_t bin_index(double x) const;
    double lower(std::size_t bin) const;  // exclusive; -inf for bin 0
    double upper(std::size_t bin) const;  // inclusive; +inf for the last bin
    // True when the bin's interval shares at least one point with [lo, hi].
    bool bin_intersects(std::size_t bin, double lo, double hi) const;
    void validate() const;

    bool operator==(const BinEdges&) const = default;
};

struct Term1D {
    std::string feature;
    BinEdges bins;
    std::vector<double> scores;
    // Unset exactly on edited bins.
    std::vector<std::optional<double>> error_bars;
    std::vector<bool> edited_mask;

    double lookup(double x) const { return scores[bins.bin_index(x)]; }
    void validate() const;

    bool operator==(const Term1D&) const = default;
};

// scores and edited_mask are row-major with bins_x.bin_count() rows.
struct Term2D {
    std::string feature_x;
    std::string feature_y;
    BinEdges bins_x;
    BinEdges bins_y;
    std::vector<double> scores;
    std::vector<bool> edited_mask;

    std::size_t cell(std::size_t bx, std::size_t by) const { return bx * bins_y.bin_count() + by; }
    double lookup(double x, double y) const { return scores[cell(bins_x.bin_index(x), bins_y.bin_index(y))]; }
    void validate() const;

    bool operator==(const Term2D&) const = default;
};

inline constexpr const char* kLogisticLink = "logistic";
inline constexpr int kModelSchemaVersion = 1;

// Term ids: a 1D term is named by its feature; a 2D term by "x:y".
std::string pair_term_id(const std::string& x, const std::string& y);

struct EbmModel {
    double intercept = 0.0;
    std::vector<Term1D> terms1d;
    std::vector<Term2D> terms2d;
    std::string link = kLogisticLink;
    std::string feature_config_ref;
    std::int64_t version = 1;
    std::optional<std::int64_t> parent_version;
    std::vector<EditOp> edit_log;

    std::size_t term_count() const { return terms1d.size() + terms2d.size(); }
    // Ids in decomposition order: 1D terms then 2D terms.
    std::vector<std::string> term_ids() const;
    // Position in term_ids(), or nullopt.
    std::optional<std::size_t> find_term(const std::string& id) const;
    std::vector<std::string> feature_names() const;
    void validate() const;

    bool operator==(const EbmModel&) const = default;
};

using FeatureVector = std::unordered_map<std::string, double>;

struct TermScore {
    std::string term_id;
    double score = 0.0;
};

struct Decomposition {
    double intercept = 0.0;
    std::vector<TermScore> terms;

    // intercept + sum of term scores, accumulated in term order.
    double total() const;
};

double sigmoid(double logit);
double logit(double probability);

// Looks up `x` in the term; throws ValidationError on NaN.
double lookup1d(const Term1D& term, double x);

Decomposition decompose(const EbmModel& model, const FeatureVector& x);
double predict_proba(const EbmModel& model, const FeatureVector& x);

// Model bound to a fixed feature column order for repeated evaluation.
class BoundModel {
public:
    BoundModel(const EbmModel& model, const std::vector<std::string>& feature_names);

    double logit(std::span<const double> row) const;
    double proba(std::span<const double> row) const { return sigmoid(logit(row)); }

private:
    const EbmModel* model_;
    std::vector<std::size_t> col1d_;
    std::vector<std::pair<std::size_t, std::size_t>> col2d_;
};

using FeatureGrids = std::unordered_map<std::string, ChannelGrid>;

// Builds the feature grid map from a featurized scene's channels.
FeatureGrids scene_feature_grids(const Scene& scene);

ChannelGrid predict_grid(const EbmModel& model, const FeatureGrids& features);
ChannelGrid importance_map(const EbmModel& model, const std::string& term_id, const FeatureGrids& features);

}  // namespace glassbox
