#include "glassbox/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "glassbox/errors.hpp"

namespace glassbox {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(EditKind kind) {
    switch (kind) {
        case EditKind::FlattenRange: return "flatten_range";
        case EditKind::Scale: return "scale";
        case EditKind::Shift: return "shift";
        case EditKind::SetValue: return "set_value";
    }
    return "unknown";
}

EditKind edit_kind_from_string(const std::string& text) {
    if (text == "flatten_range") return EditKind::FlattenRange;
    if (text == "scale") return EditKind::Scale;
    if (text == "shift") return EditKind::Shift;
    if (text == "set_value") return EditKind::SetValue;
    throw ValidationError("unknown edit kind '" + text + "'");
}

void EditOp::validate() const {
    if (term.empty()) throw ValidationError("edit op has no term");
    for (const auto* r : {&range, &range_y}) {
        if (*r && (std::isnan((*r)->lo) || std::isnan((*r)->hi) || (*r)->lo > (*r)->hi)) {
            throw ValidationError("edit range must satisfy lo <= hi");
        }
    }
    switch (kind) {
        case EditKind::Scale:
            if (!std::isfinite(factor)) throw ValidationError("scale edit needs a finite factor");
            break;
        case EditKind::Shift:
            if (!std::isfinite(delta)) throw ValidationError("shift edit needs a finite delta");
            break;
        case EditKind::SetValue:
            if (!value || !std::isfinite(*value)) throw ValidationError("set_value edit needs a finite value");
            break;
        case EditKind::FlattenRange:
            if (value && !std::isfinite(*value)) throw ValidationError("flatten_range value must be finite");
            break;
    }
}

std::size_t BinEdges::bin_index(double x) const {
    // First edge >= x; values equal to an edge belong to the bin on its left.
    return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

double BinEdges::lower(std::size_t bin) const { return bin == 0 ? -kInf : edges[bin - 1]; }
double BinEdges::upper(std::size_t bin) const { return bin >= edges.size() ? kInf : edges[bin]; }

bool BinEdges::bin_intersects(std::size_t bin, double lo, double hi) const {
    return lo <= hi && lo <= upper(bin) && hi > lower(bin);
}

void BinEdges::validate() const {
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!std::isfinite(edges[i])) throw ValidationError("bin edges must be finite");
        if (i > 0 && !(edges[i - 1] < edges[i])) throw ValidationError("bin edges must be strictly increasing");
    }
}

void Term1D::validate() const {
    bins.validate();
    const auto n = bins.bin_count();
    if (scores.size() != n || error_bars.size() != n || edited_mask.size() != n) {
        throw ValidationError("term '" + feature + "': per-bin arrays must have " + std::to_string(n) + " entries");
    }
    for (std::size_t b = 0; b < n; ++b) {
        if (!std::isfinite(scores[b])) throw ValidationError("term '" + feature + "' has a non-finite score");
        if (edited_mask[b] == error_bars[b].has_value()) {
            throw ValidationError("term '" + feature + "': error bars must be absent exactly on edited bins");
        }
        if (error_bars[b] && !(*error_bars[b] >= 0.0)) {
            throw ValidationError("term '" + feature + "' has a negative error bar");
        }
    }
}

void Term2D::validate() const {
    bins_x.validate();
    bins_y.validate();
    const auto n = bins_x.bin_count() * bins_y.bin_count();
    if (scores.size() != n || edited_mask.size() != n) {
        throw ValidationError("term '" + pair_term_id(feature_x, feature_y) + "': score grid has the wrong shape");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("pair term has a non-finite score");
    }
}

std::string pair_term_id(const std::string& x, const std::string& y) { return x + ":" + y; }

std::vector<std::string> EbmModel::term_ids() const {
    std::vector<std::string> ids;
    ids.reserve(term_count());
    for (const auto& t : terms1d) ids.push_back(t.feature);
    for (const auto& t : terms2d) ids.push_back(pair_term_id(t.feature_x, t.feature_y));
    return ids;
}

std::optional<std::size_t> EbmModel::find_term(const std::string& id) const {
    for (std::size_t i = 0; i < terms1d.size(); ++i) {
        if (terms1d[i].feature == id) return i;
    }
    for (std::size_t i = 0; i < terms2d.size(); ++i) {
        if (pair_term_id(terms2d[i].feature_x, terms2d[i].feature_y) == id) return terms1d.size() + i;
    }
    return std::nullopt;
}

std::vector<std::string> EbmModel::feature_names() const {
    std::vector<std::string> names;
    for (const auto& t : terms1d) names.push_back(t.feature);
    return names;
}

void EbmModel::validate() const {
    if (!std::isfinite(intercept)) throw ValidationError("model intercept must be finite");
    if (link != kLogisticLink) throw ValidationError("unsupported link '" + link + "'");
    std::set<std::string> features;
    for (const auto& t : terms1d) {
        t.validate();
        if (!features.insert(t.feature).second) throw ValidationError("duplicate term for feature '" + t.feature + "'");
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& t : terms2d) {
        t.validate();
        if (t.feature_x == t.feature_y) throw ValidationError("pair term must use two different features");
        if (!features.count(t.feature_x) || !features.count(t.feature_y)) {
            throw ValidationError("pair term '" + pair_term_id(t.feature_x, t.feature_y) +
                                  "' uses a feature without a 1D term");
        }
        auto key = std::minmax(t.feature_x, t.feature_y);
        if (!pairs.insert({key.first, key.second}).second) {
            throw ValidationError("duplicate pair term '" + pair_term_id(t.feature_x, t.feature_y) + "'");
        }
    }
    if (parent_version && !(version > *parent_version)) {
        throw ValidationError("model version must exceed its parent version");
    }
}

double Decomposition::total() const {
    double sum = intercept;
    for (const auto& t : terms) sum += t.score;
    return sum;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double lookup1d(const Term1D& term, double x) {
    if (std::isnan(x)) throw ValidationError("cannot look up NaN in term '" + term.feature + "'");
    return term.lookup(x);
}

namespace {

double feature_value(const FeatureVector& x, const std::string& name) {
    auto it = x.find(name);
    if (it == x.end()) throw ValidationError("input is missing feature '" + name + "'");
    if (std::isnan(it->second)) throw ValidationError("feature '" + name + "' is NaN");
    return it->second;
}

}  // namespace

Decomposition decompose(const EbmModel& model, const FeatureVector& x) {
    Decomposition out;
    out.intercept = model.intercept;
    out.terms.reserve(model.term_count());
    for (const auto& t : model.terms1d) out.terms.push_back({t.feature, t.lookup(feature_value(x, t.feature))});
    for (const auto& t : model.terms2d) {
        out.terms.push_back({pair_term_id(t.feature_x, t.feature_y),
                             t.lookup(feature_value(x, t.feature_x), feature_value(x, t.feature_y))});
    }
    return out;
}

double predict_proba(const EbmModel& model, const FeatureVector& x) { return sigmoid(decompose(model, x).total()); }

BoundModel::BoundModel(const EbmModel& model, const std::vector<std::string>& feature_names) : model_(&model) {
    auto column = [&](const std::string& name) {
        auto it = std::find(feature_names.begin(), feature_names.end(), name);
        if (it == feature_names.end()) throw ValidationError("input is missing feature '" + name + "'");
        return static_cast<std::size_t>(it - feature_names.begin());
    };
    for (const auto& t : model.terms1d) col1d_.push_back(column(t.feature));
    for (const auto& t : model.terms2d) col2d_.emplace_back(column(t.feature_x), column(t.feature_y));
}

double BoundModel::logit(std::span<const double> row) const {
    double sum = model_->intercept;
    for (std::size_t i = 0; i < col1d_.size(); ++i) sum += model_->terms1d[i].lookup(row[col1d_[i]]);
    for (std::size_t i = 0; i < col2d_.size(); ++i) {
        sum += model_->terms2d[i].lookup(row[col2d_[i].first], row[col2d_[i].second]);
    }
    return sum;
}

FeatureGrids scene_feature_grids(const Scene& scene) {
    FeatureGrids out;
    for (const auto& [name, grid] : scene.channels) out.emplace(name, grid);
    return out;
}

namespace {

const ChannelGrid& feature_grid(const FeatureGrids& features, const std::string& name) {
    auto it = features.find(name);
    if (it == features.end()) throw ValidationError("missing feature grid '" + name + "'");
    return it->second;
}

}  // namespace

ChannelGrid predict_grid(const EbmModel& model, const FeatureGrids& features) {
    auto names = model.feature_names();
    std::vector<const ChannelGrid*> grids;
    for (const auto& name : names) grids.push_back(&feature_grid(features, name));
    const ChannelGrid* shape = nullptr;
    for (const auto* g : grids) {
        if (shape && !g->same_shape(*shape)) throw ValidationError("feature grids differ in shape");
        shape = g;
    }
    if (!shape) {
        // Intercept-only model: take the shape from any provided grid.
        if (features.empty()) throw ValidationError("predict_grid needs at least one feature grid");
        shape = &features.begin()->second;
        for (const auto& [name, g] : features) {
            if (!g.same_shape(*shape)) throw ValidationError("feature grids differ in shape");
        }
    }
    BoundModel bound(model, names);
    ChannelGrid out = shape->like("probability", "probability", std::vector<double>(shape->size()));
    std::vector<double> row(grids.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        for (std::size_t j = 0; j < grids.size(); ++j) row[j] = grids[j]->values[i];
        out.values[i] = bound.proba(row);
    }
    return out;
}

ChannelGrid importance_map(const EbmModel& model, const std::string& term_id, const FeatureGrids& features) {
    auto index = model.find_term(term_id);
    if (!index) throw NotFoundError("model has no term '" + term_id + "'");
    if (*index < model.terms1d.size()) {
        const auto& term = model.terms1d[*index];
        const auto& g = feature_grid(features, term.feature);
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = term.lookup(g.values[i]);
        return g.like("importance." + term_id, "score", std::move(out));
    }
    const auto& term = model.terms2d[*index - model.terms1d.size()];
    const auto& gx = feature_grid(features, term.feature_x);
    const auto& gy = feature_grid(features, term.feature_y);
    if (!gx.same_shape(gy)) throw ValidationError("feature grids differ in shape");
    std::vector<double> out(gx.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = term.lookup(gx.values[i], gy.values[i]);
    return gx.like("importance." + term_id, "score", std::move(out));
}

}  // namespace glassbox
