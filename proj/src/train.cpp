#include "glassbox/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "glassbox/binning.hpp"
#include "glassbox/errors.hpp"
#include "glassbox/parallel.hpp"
#include "glassbox/random.hpp"

namespace glassbox {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0, 1]");
    if (outer_bags < 1) throw ConfigError("outer_bags must be >= 1");
    if (max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
    if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
    if (max_bins_1d < 2 || max_bins_1d > 65535) throw ConfigError("max_bins_1d must be in [2, 65535]");
    if (max_bins_2d < 2 || max_bins_2d > 255) throw ConfigError("max_bins_2d must be in [2, 255]");
    if (max_pairs && *max_pairs < 0) throw ConfigError("max_pairs must be >= 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must be in (0, 1)");
    }
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::size_t TrainConfig::pair_budget(std::size_t feature_count) const {
    const std::size_t possible = feature_count * (feature_count > 0 ? feature_count - 1 : 0) / 2;
    std::size_t wanted = max_pairs ? static_cast<std::size_t>(*max_pairs) : (feature_count <= 4 ? possible : 10);
    return std::min(wanted, possible);
}

void to_json(json& j, const TrainConfig& cfg) {
    j = json{{"learning_rate", cfg.learning_rate},
             {"outer_bags", cfg.outer_bags},
             {"max_rounds", cfg.max_rounds},
             {"early_stop_patience", cfg.early_stop_patience},
             {"max_bins_1d", cfg.max_bins_1d},
             {"max_bins_2d", cfg.max_bins_2d},
             {"max_pairs", cfg.max_pairs ? json(*cfg.max_pairs) : json("all")},
             {"validation_fraction", cfg.validation_fraction},
             {"min_samples_leaf", cfg.min_samples_leaf},
             {"seed", cfg.seed},
             {"cycle_order", cfg.cycle_order == CycleOrder::ByName ? "name" : "column"}};
}

void from_json(const json& j, TrainConfig& cfg) {
    TrainConfig d;
    cfg.learning_rate = j.value("learning_rate", d.learning_rate);
    cfg.outer_bags = j.value("outer_bags", d.outer_bags);
    cfg.max_rounds = j.value("max_rounds", d.max_rounds);
    cfg.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
    cfg.max_bins_1d = j.value("max_bins_1d", d.max_bins_1d);
    cfg.max_bins_2d = j.value("max_bins_2d", d.max_bins_2d);
    cfg.max_pairs.reset();
    if (j.contains("max_pairs") && !j["max_pairs"].is_null()) {
        const auto& mp = j["max_pairs"];
        if (mp.is_string()) {
            if (mp.get<std::string>() != "all") throw ConfigError("max_pairs must be an integer or \"all\"");
        } else {
            cfg.max_pairs = mp.get<int>();
        }
    }
    cfg.validation_fraction = j.value("validation_fraction", d.validation_fraction);
    cfg.min_samples_leaf = j.value("min_samples_leaf", d.min_samples_leaf);
    cfg.seed = j.value("seed", d.seed);
    cfg.jobs = j.value("jobs", d.jobs);
    auto order = j.value("cycle_order", std::string("name"));
    if (order == "name") {
        cfg.cycle_order = CycleOrder::ByName;
    } else if (order == "column") {
        cfg.cycle_order = CycleOrder::ByColumn;
    } else {
        throw ConfigError("cycle_order must be \"name\" or \"column\"");
    }
}

namespace {

json trace_json(const StageTrace& t) {
    return json{{"rounds", t.rounds},
                {"best_round", t.best_round},
                {"best_validation_loss", t.best_validation_loss},
                {"train_loss", t.train_loss},
                {"validation_loss", t.validation_loss}};
}

}  // namespace

json to_json(const TrainReport& report) {
    json bags = json::array();
    for (const auto& b : report.bags) {
        bags.push_back(json{{"bag", b.bag},
                            {"train_rows", b.train_rows},
                            {"validation_rows", b.validation_rows},
                            {"mains", trace_json(b.mains)},
                            {"pairs", trace_json(b.pairs)}});
    }
    json ranking = json::array();
    for (const auto& p : report.pair_ranking) {
        ranking.push_back(json{{"feature_x", p.feature_x}, {"feature_y", p.feature_y}, {"gain", p.gain},
                               {"selected", p.selected}});
    }
    return json{{"bags", std::move(bags)}, {"pair_ranking", std::move(ranking)}};
}

namespace {

double log_loss(double s, std::uint8_t y) {
    return std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0) - (y ? s : 0.0);
}

double mean_log_loss(std::span<const double> s, std::span<const std::uint8_t> y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += log_loss(s[i], y[i]);
    return s.empty() ? 0.0 : sum / static_cast<double>(s.size());
}

struct BagSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> validation;
};

BagSplit make_bag_split(std::size_t n, const TrainConfig& cfg, int bag) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(bag)));
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    BagSplit split;
    split.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

struct BinnedColumn {
    BinEdges edges;
    std::vector<std::uint16_t> bins;
};

BinnedColumn bin_column(std::span<const double> values, int max_bins) {
    BinnedColumn out{quantile_bins(values, max_bins), {}};
    out.bins.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.bins[i] = static_cast<std::uint16_t>(out.edges.bin_index(values[i]));
    }
    return out;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& src, const std::vector<std::uint32_t>& idx) {
    std::vector<T> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = src[idx[i]];
    return out;
}

// Term visiting order: column indices sorted by name, or plain column order.
std::vector<std::size_t> visit_order(const std::vector<std::string>& names, CycleOrder order) {
    std::vector<std::size_t> idx(names.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (order == CycleOrder::ByName) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
    }
    return idx;
}

struct GradHist {
    std::vector<double> g, h;
    std::vector<std::uint32_t> n;

    explicit GradHist(std::size_t bins) : g(bins), h(bins), n(bins) {}
    void clear() {
        std::fill(g.begin(), g.end(), 0.0);
        std::fill(h.begin(), h.end(), 0.0);
        std::fill(n.begin(), n.end(), 0u);
    }
};

// Accumulates logistic gradient/hessian per bin. Returns the summed loss of
// the current scores when `with_loss` is set.
template <typename BinT>
double accumulate(std::span<const BinT> bins, std::span<const double> s, std::span<const std::uint8_t> y,
                  GradHist& hist, bool with_loss) {
    hist.clear();
    double loss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = std::exp(-std::abs(s[i]));
        const double p = s[i] >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        const auto b = bins[i];
        hist.g[b] += p - y[i];
        hist.h[b] += p * (1.0 - p);
        hist.n[b] += 1;
        if (with_loss) loss += std::log1p(e) + std::max(s[i], 0.0) - (y[i] ? s[i] : 0.0);
    }
    return loss;
}

constexpr double kHessianFloor = 1e-12;

double leaf_score(double g, double h) { return g * g / std::max(h, kHessianFloor); }
double leaf_value(double g, double h) { return -g / std::max(h, kHessianFloor); }

struct StumpSplit {
    bool valid = false;
    std::size_t cut = 0;  // bins <= cut go left
    double left = 0.0;
    double right = 0.0;
};

StumpSplit best_stump(const GradHist& hist, int min_leaf, double lr) {
    const std::size_t bins = hist.g.size();
    double G = 0.0, H = 0.0;
    std::uint64_t N = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        G += hist.g[b];
        H += hist.h[b];
        N += hist.n[b];
    }
    const double parent = leaf_score(G, H);
    StumpSplit best;
    double best_gain = 0.0;
    double gl = 0.0, hl = 0.0;
    std::uint64_t nl = 0;
    for (std::size_t b = 0; b + 1 < bins; ++b) {
        gl += hist.g[b];
        hl += hist.h[b];
        nl += hist.n[b];
        const std::uint64_t nr = N - nl;
        if (nl < static_cast<std::uint64_t>(min_leaf) || nr < static_cast<std::uint64_t>(min_leaf)) continue;
        const double gr = G - gl, hr = H - hl;
        const double gain = leaf_score(gl, hl) + leaf_score(gr, hr) - parent;
        if (gain > best_gain) {
            best_gain = gain;
            best = {true, b, lr * leaf_value(gl, hl), lr * leaf_value(gr, hr)};
        }
    }
    return best;
}

struct MainStageResult {
    double intercept = 0.0;
    std::vector<std::vector<double>> scores;  // per table column
    StageTrace trace;
};

MainStageResult boost_mains(const std::vector<BinnedColumn>& columns, const std::vector<std::size_t>& order,
                            const std::vector<std::uint8_t>& targets, const BagSplit& split, const TrainConfig& cfg) {
    const auto y_tr = gather(targets, split.train);
    const auto y_va = gather(targets, split.validation);
    std::size_t pos = 0;
    for (auto y : y_tr) pos += y;
    if (pos == 0 || pos == y_tr.size()) {
        throw ValidationError("a bag's training split holds a single class; use more data or a smaller validation_fraction");
    }

    MainStageResult out;
    out.intercept = std::log(static_cast<double>(pos) / static_cast<double>(y_tr.size() - pos));
    out.scores.resize(columns.size());

    std::vector<std::vector<std::uint16_t>> bins_tr(columns.size()), bins_va(columns.size());
    for (std::size_t f = 0; f < columns.size(); ++f) {
        bins_tr[f] = gather(columns[f].bins, split.train);
        bins_va[f] = gather(columns[f].bins, split.validation);
        out.scores[f].assign(columns[f].edges.bin_count(), 0.0);
    }
    std::vector<double> s_tr(y_tr.size(), out.intercept), s_va(y_va.size(), out.intercept);

    auto& trace = out.trace;
    trace.train_loss.push_back(mean_log_loss(s_tr, y_tr));
    trace.validation_loss.push_back(mean_log_loss(s_va, y_va));
    trace.best_validation_loss = trace.validation_loss.back();
    auto best_scores = out.scores;

    std::vector<GradHist> hists;
    for (const auto& c : columns) hists.emplace_back(c.edges.bin_count());

    const double n_tr = static_cast<double>(y_tr.size());
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        bool first = true;
        for (auto f : order) {
            auto& hist = hists[f];
            double loss = accumulate<std::uint16_t>(bins_tr[f], s_tr, y_tr, hist, first && round > 1);
            if (first && round > 1) trace.train_loss.push_back(loss / n_tr);
            first = false;
            auto split_f = best_stump(hist, cfg.min_samples_leaf, cfg.learning_rate);
            if (!split_f.valid) continue;
            auto& sc = out.scores[f];
            for (std::size_t b = 0; b < sc.size(); ++b) sc[b] += b <= split_f.cut ? split_f.left : split_f.right;
            const auto& btr = bins_tr[f];
            for (std::size_t i = 0; i < s_tr.size(); ++i) s_tr[i] += btr[i] <= split_f.cut ? split_f.left : split_f.right;
            const auto& bva = bins_va[f];
            for (std::size_t i = 0; i < s_va.size(); ++i) s_va[i] += bva[i] <= split_f.cut ? split_f.left : split_f.right;
        }
        if (order.empty()) trace.train_loss.push_back(mean_log_loss(s_tr, y_tr));
        trace.rounds = round;
        double val = mean_log_loss(s_va, y_va);
        trace.validation_loss.push_back(val);
        if (val < trace.best_validation_loss) {
            trace.best_validation_loss = val;
            trace.best_round = round;
            best_scores = out.scores;
        } else if (round - trace.best_round >= cfg.early_stop_patience) {
            break;
        }
    }
    // The loss of the final round has not been folded into a histogram pass.
    if (trace.train_loss.size() < trace.validation_loss.size()) trace.train_loss.push_back(mean_log_loss(s_tr, y_tr));
    out.scores = std::move(best_scores);
    return out;
}

// --- pairs ---------------------------------------------------------------

struct PairSpec {
    std::size_t x = 0;  // table column of the term's x feature
    std::size_t y = 0;
};

struct PairGrid {
    std::size_t bx = 0, by = 0;
    std::vector<std::uint16_t> cells;  // per table row
};

PairGrid pair_cells(const BinnedColumn& cx, const BinnedColumn& cy) {
    PairGrid g{cx.edges.bin_count(), cy.edges.bin_count(), std::vector<std::uint16_t>(cx.bins.size())};
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
        g.cells[i] = static_cast<std::uint16_t>(cx.bins[i] * g.by + cy.bins[i]);
    }
    return g;
}

struct Rect {
    std::size_t x0, x1, y0, y1;  // inclusive bin ranges
    double value;
};

struct SideBest {
    bool valid = false;
    double score = 0.0;
    bool has_cut = false;
    std::size_t cut = 0;
};

// Best optional single cut of a 1D marginal; no cut scores the side as one leaf.
SideBest best_side(std::span<const double> g, std::span<const double> h, std::span<const std::uint64_t> n,
                   std::uint64_t min_leaf) {
    double G = 0.0, H = 0.0;
    std::uint64_t N = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        G += g[k];
        H += h[k];
        N += n[k];
    }
    SideBest best;
    if (N < min_leaf) return best;
    best.valid = true;
    best.score = leaf_score(G, H);
    double gl = 0.0, hl = 0.0;
    std::uint64_t nl = 0;
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        gl += g[k];
        hl += h[k];
        nl += n[k];
        if (nl < min_leaf || N - nl < min_leaf) continue;
        double s = leaf_score(gl, hl) + leaf_score(G - gl, H - hl);
        if (s > best.score) {
            best.score = s;
            best.has_cut = true;
            best.cut = k;
        }
    }
    return best;
}

struct PairTree {
    bool valid = false;
    double gain = 0.0;
    std::vector<Rect> leaves;
};

// Depth-2 tree over the 2D histogram: a root cut on one axis, then an
// optional cut on the other axis within each side.
PairTree best_pair_tree(const GradHist& hist, std::size_t bx, std::size_t by, int min_samples_leaf, double lr) {
    const auto min_leaf = static_cast<std::uint64_t>(min_samples_leaf);
    double G = 0.0, H = 0.0;
    for (std::size_t c = 0; c < hist.g.size(); ++c) {
        G += hist.g[c];
        H += hist.h[c];
    }
    const double parent = leaf_score(G, H);
    PairTree best;

    for (int axis = 0; axis < 2; ++axis) {
        // Root axis length A, other axis length B; cell(a, b) maps back to (x, y).
        const std::size_t A = axis == 0 ? bx : by;
        const std::size_t B = axis == 0 ? by : bx;
        auto cell = [&](std::size_t a, std::size_t b) { return axis == 0 ? a * by + b : b * by + a; };

        std::vector<double> tg(B, 0.0), th(B, 0.0);
        std::vector<std::uint64_t> tn(B, 0);
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t b = 0; b < B; ++b) {
                tg[b] += hist.g[cell(a, b)];
                th[b] += hist.h[cell(a, b)];
                tn[b] += hist.n[cell(a, b)];
            }
        }
        std::vector<double> lg(B, 0.0), lh(B, 0.0), rg(B), rh(B);
        std::vector<std::uint64_t> ln(B, 0), rn(B);
        for (std::size_t cut = 0; cut + 1 < A; ++cut) {
            for (std::size_t b = 0; b < B; ++b) {
                lg[b] += hist.g[cell(cut, b)];
                lh[b] += hist.h[cell(cut, b)];
                ln[b] += hist.n[cell(cut, b)];
                rg[b] = tg[b] - lg[b];
                rh[b] = th[b] - lh[b];
                rn[b] = tn[b] - ln[b];
            }
            auto left = best_side(lg, lh, ln, min_leaf);
            auto right = best_side(rg, rh, rn, min_leaf);
            if (!left.valid || !right.valid) continue;
            double gain = left.score + right.score - parent;
            if (!(gain > best.gain)) continue;

            best.valid = true;
            best.gain = gain;
            best.leaves.clear();
            auto add_side = [&](std::size_t a0, std::size_t a1, const SideBest& side, const std::vector<double>& sg,
                                const std::vector<double>& sh) {
                auto add = [&](std::size_t b0, std::size_t b1) {
                    double g = 0.0, h = 0.0;
                    for (std::size_t b = b0; b <= b1; ++b) {
                        g += sg[b];
                        h += sh[b];
                    }
                    double v = lr * leaf_value(g, h);
                    if (axis == 0) {
                        best.leaves.push_back({a0, a1, b0, b1, v});
                    } else {
                        best.leaves.push_back({b0, b1, a0, a1, v});
                    }
                };
                if (side.has_cut) {
                    add(0, side.cut);
                    add(side.cut + 1, B - 1);
                } else {
                    add(0, B - 1);
                }
            };
            add_side(0, cut, left, lg, lh);
            add_side(cut + 1, A - 1, right, rg, rh);
        }
    }
    return best;
}

struct PairStageResult {
    std::vector<std::vector<double>> scores;  // per selected pair, row-major cells
    StageTrace trace;
};

PairStageResult boost_pairs(const std::vector<PairGrid>& grids, std::span<const double> base_logits,
                            const std::vector<std::uint8_t>& targets, const BagSplit& split, const TrainConfig& cfg) {
    const auto y_tr = gather(targets, split.train);
    const auto y_va = gather(targets, split.validation);
    std::vector<double> s_tr(split.train.size()), s_va(split.validation.size());
    for (std::size_t i = 0; i < s_tr.size(); ++i) s_tr[i] = base_logits[split.train[i]];
    for (std::size_t i = 0; i < s_va.size(); ++i) s_va[i] = base_logits[split.validation[i]];

    PairStageResult out;
    std::vector<std::vector<std::uint16_t>> cells_tr, cells_va;
    std::vector<GradHist> hists;
    for (const auto& g : grids) {
        cells_tr.push_back(gather(g.cells, split.train));
        cells_va.push_back(gather(g.cells, split.validation));
        out.scores.emplace_back(g.bx * g.by, 0.0);
        hists.emplace_back(g.bx * g.by);
    }

    auto& trace = out.trace;
    trace.train_loss.push_back(mean_log_loss(s_tr, y_tr));
    trace.validation_loss.push_back(mean_log_loss(s_va, y_va));
    trace.best_validation_loss = trace.validation_loss.back();
    auto best_scores = out.scores;
    if (grids.empty()) return out;

    std::vector<double> delta;
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        for (std::size_t p = 0; p < grids.size(); ++p) {
            accumulate<std::uint16_t>(cells_tr[p], s_tr, y_tr, hists[p], false);
            auto tree = best_pair_tree(hists[p], grids[p].bx, grids[p].by, cfg.min_samples_leaf, cfg.learning_rate);
            if (!tree.valid) continue;
            delta.assign(grids[p].bx * grids[p].by, 0.0);
            for (const auto& leaf : tree.leaves) {
                for (std::size_t x = leaf.x0; x <= leaf.x1; ++x) {
                    for (std::size_t y = leaf.y0; y <= leaf.y1; ++y) delta[x * grids[p].by + y] = leaf.value;
                }
            }
            for (std::size_t c = 0; c < delta.size(); ++c) out.scores[p][c] += delta[c];
            for (std::size_t i = 0; i < s_tr.size(); ++i) s_tr[i] += delta[cells_tr[p][i]];
            for (std::size_t i = 0; i < s_va.size(); ++i) s_va[i] += delta[cells_va[p][i]];
        }
        trace.rounds = round;
        trace.train_loss.push_back(mean_log_loss(s_tr, y_tr));
        double val = mean_log_loss(s_va, y_va);
        trace.validation_loss.push_back(val);
        if (val < trace.best_validation_loss) {
            trace.best_validation_loss = val;
            trace.best_round = round;
            best_scores = out.scores;
        } else if (round - trace.best_round >= cfg.early_stop_patience) {
            break;
        }
    }
    out.scores = std::move(best_scores);
    return out;
}

// Four-quadrant (one cut per axis) Newton gain of the residual gradient.
double fast_pair_gain(const PairGrid& grid, std::span<const double> logits, std::span<const std::uint8_t> targets,
                      int min_samples_leaf) {
    const std::size_t bx = grid.bx, by = grid.by;
    GradHist hist(bx * by);
    accumulate<std::uint16_t>(grid.cells, logits, targets, hist, false);
    // Inclusive 2D prefix sums with a zero border.
    const std::size_t w = by + 1;
    std::vector<double> pg((bx + 1) * w, 0.0), ph((bx + 1) * w, 0.0);
    std::vector<std::uint64_t> pn((bx + 1) * w, 0);
    for (std::size_t x = 0; x < bx; ++x) {
        for (std::size_t y = 0; y < by; ++y) {
            const std::size_t c = x * by + y, o = (x + 1) * w + (y + 1);
            pg[o] = hist.g[c] + pg[o - w] + pg[o - 1] - pg[o - w - 1];
            ph[o] = hist.h[c] + ph[o - w] + ph[o - 1] - ph[o - w - 1];
            pn[o] = hist.n[c] + pn[o - w] + pn[o - 1] - pn[o - w - 1];
        }
    }
    auto at = [&](const auto& p, std::size_t x, std::size_t y) { return p[x * w + y]; };
    const double G = at(pg, bx, by), H = at(ph, bx, by);
    const std::uint64_t N = at(pn, bx, by);
    const double parent = leaf_score(G, H);
    const auto min_leaf = static_cast<std::uint64_t>(min_samples_leaf);
    double best = 0.0;
    for (std::size_t cx = 1; cx < bx; ++cx) {
        for (std::size_t cy = 1; cy < by; ++cy) {
            const double g00 = at(pg, cx, cy), h00 = at(ph, cx, cy);
            const std::uint64_t n00 = at(pn, cx, cy);
            const double g01 = at(pg, cx, by) - g00, h01 = at(ph, cx, by) - h00;
            const std::uint64_t n01 = at(pn, cx, by) - n00;
            const double g10 = at(pg, bx, cy) - g00, h10 = at(ph, bx, cy) - h00;
            const std::uint64_t n10 = at(pn, bx, cy) - n00;
            const double g11 = G - g00 - g01 - g10, h11 = H - h00 - h01 - h10;
            const std::uint64_t n11 = N - n00 - n01 - n10;
            if (n00 < min_leaf || n01 < min_leaf || n10 < min_leaf || n11 < min_leaf) continue;
            const double gain =
                leaf_score(g00, h00) + leaf_score(g01, h01) + leaf_score(g10, h10) + leaf_score(g11, h11) - parent;
            best = std::max(best, gain);
        }
    }
    return best;
}

void check_table(const PixelTable& table) {
    table.validate();
    if (table.size() < 2) throw ValidationError("training table needs at least two rows");
    std::size_t pos = 0;
    for (auto t : table.targets) pos += t;
    if (pos == 0 || pos == table.size()) throw ValidationError("training targets hold a single class");
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        for (double v : table.columns[j]) {
            if (!std::isfinite(v)) throw ValidationError("feature '" + table.feature_names[j] + "' has NaN or infinite values");
        }
    }
}

// Canonical orientation of every pair plus its 2D binning.
struct PairCandidates {
    std::vector<PairSpec> specs;
    std::vector<PairGrid> grids;
};

PairCandidates enumerate_pairs(const PixelTable& table, const TrainConfig& cfg) {
    auto order = visit_order(table.feature_names, cfg.cycle_order);
    std::vector<BinnedColumn> coarse;
    for (const auto& col : table.columns) coarse.push_back(bin_column(col, cfg.max_bins_2d));
    PairCandidates out;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            PairSpec spec{order[a], order[b]};
            out.specs.push_back(spec);
            out.grids.push_back(pair_cells(coarse[spec.x], coarse[spec.y]));
        }
    }
    return out;
}

std::vector<PairRank> rank_candidates(const PixelTable& table, const PairCandidates& cands,
                                      std::span<const double> base_logits, const TrainConfig& cfg,
                                      std::vector<std::size_t>& ranked_index) {
    std::vector<double> gains(cands.specs.size());
    parallel_for(cands.specs.size(), cfg.jobs, [&](std::size_t p) {
        gains[p] = fast_pair_gain(cands.grids[p], base_logits, table.targets, cfg.min_samples_leaf);
    });
    ranked_index.resize(cands.specs.size());
    std::iota(ranked_index.begin(), ranked_index.end(), 0);
    // Candidates are enumerated in visit order, so the stable sort breaks
    // ties deterministically.
    std::stable_sort(ranked_index.begin(), ranked_index.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    std::vector<PairRank> ranking;
    const auto budget = cfg.pair_budget(table.feature_count());
    for (std::size_t r = 0; r < ranked_index.size(); ++r) {
        const auto& spec = cands.specs[ranked_index[r]];
        ranking.push_back({table.feature_names[spec.x], table.feature_names[spec.y], gains[ranked_index[r]], r < budget});
    }
    return ranking;
}

}  // namespace

std::vector<PairRank> rank_pairs(const PixelTable& table, std::span<const double> base_logits, const TrainConfig& cfg) {
    cfg.validate();
    check_table(table);
    if (base_logits.size() != table.size()) throw ValidationError("base_logits must have one entry per table row");
    auto cands = enumerate_pairs(table, cfg);
    std::vector<std::size_t> ranked;
    return rank_candidates(table, cands, base_logits, cfg, ranked);
}

std::vector<Term2D> fit_pairs(const PixelTable& table, std::span<const double> base_logits, const TrainConfig& cfg,
                              TrainReport* report) {
    cfg.validate();
    check_table(table);
    if (base_logits.size() != table.size()) throw ValidationError("base_logits must have one entry per table row");

    auto cands = enumerate_pairs(table, cfg);
    std::vector<std::size_t> ranked;
    auto ranking = rank_candidates(table, cands, base_logits, cfg, ranked);
    const auto budget = cfg.pair_budget(table.feature_count());

    std::vector<PairSpec> chosen;
    std::vector<PairGrid> grids;
    for (std::size_t r = 0; r < budget; ++r) {
        chosen.push_back(cands.specs[ranked[r]]);
        grids.push_back(cands.grids[ranked[r]]);
    }

    std::vector<PairStageResult> bags(static_cast<std::size_t>(cfg.outer_bags));
    std::vector<BagSplit> splits(bags.size());
    parallel_for(bags.size(), cfg.jobs, [&](std::size_t b) {
        splits[b] = make_bag_split(table.size(), cfg, static_cast<int>(b));
        bags[b] = boost_pairs(grids, base_logits, table.targets, splits[b], cfg);
    });

    std::vector<Term2D> terms;
    for (std::size_t p = 0; p < chosen.size(); ++p) {
        Term2D t;
        t.feature_x = table.feature_names[chosen[p].x];
        t.feature_y = table.feature_names[chosen[p].y];
        t.bins_x = quantile_bins(table.columns[chosen[p].x], cfg.max_bins_2d);
        t.bins_y = quantile_bins(table.columns[chosen[p].y], cfg.max_bins_2d);
        const std::size_t cells = grids[p].bx * grids[p].by;
        t.scores.assign(cells, 0.0);
        for (const auto& bag : bags) {
            for (std::size_t c = 0; c < cells; ++c) t.scores[c] += bag.scores[p][c];
        }
        for (double& s : t.scores) s /= static_cast<double>(bags.size());
        t.edited_mask.assign(cells, false);
        terms.push_back(std::move(t));
    }

    if (report) {
        report->pair_ranking = std::move(ranking);
        if (report->bags.size() < bags.size()) report->bags.resize(bags.size());
        for (std::size_t b = 0; b < bags.size(); ++b) {
            report->bags[b].bag = static_cast<int>(b);
            report->bags[b].train_rows = splits[b].train.size();
            report->bags[b].validation_rows = splits[b].validation.size();
            report->bags[b].pairs = std::move(bags[b].trace);
        }
    }
    return terms;
}

BinPopulations bin_populations(const EbmModel& model, const PixelTable& table) {
    BinPopulations pop;
    for (const auto& t : model.terms1d) {
        const auto& col = table.columns[table.feature_index(t.feature)];
        std::vector<double> counts(t.bins.bin_count(), 0.0);
        for (double v : col) counts[t.bins.bin_index(v)] += 1.0;
        pop.terms1d.push_back(std::move(counts));
    }
    for (const auto& t : model.terms2d) {
        const auto& cx = table.columns[table.feature_index(t.feature_x)];
        const auto& cy = table.columns[table.feature_index(t.feature_y)];
        std::vector<double> counts(t.scores.size(), 0.0);
        for (std::size_t i = 0; i < cx.size(); ++i) counts[t.cell(t.bins_x.bin_index(cx[i]), t.bins_y.bin_index(cy[i]))] += 1.0;
        pop.terms2d.push_back(std::move(counts));
    }
    return pop;
}

EbmModel mean_center(const EbmModel& model, const BinPopulations& populations) {
    if (populations.terms1d.size() != model.terms1d.size() || populations.terms2d.size() != model.terms2d.size()) {
        throw ValidationError("populations do not match the model's terms");
    }
    EbmModel out = model;
    auto center = [&](std::vector<double>& scores, const std::vector<double>& weights) {
        if (weights.size() != scores.size()) throw ValidationError("population size does not match a term's bins");
        double wsum = 0.0, ssum = 0.0;
        for (std::size_t b = 0; b < scores.size(); ++b) {
            wsum += weights[b];
            ssum += weights[b] * scores[b];
        }
        if (!(wsum > 0.0)) return;
        const double mean = ssum / wsum;
        if (mean == 0.0) return;
        for (double& s : scores) s -= mean;
        out.intercept += mean;
    };
    for (std::size_t i = 0; i < out.terms1d.size(); ++i) center(out.terms1d[i].scores, populations.terms1d[i]);
    for (std::size_t i = 0; i < out.terms2d.size(); ++i) center(out.terms2d[i].scores, populations.terms2d[i]);
    return out;
}

FitResult fit(const PixelTable& table, const TrainConfig& cfg) {
    cfg.validate();
    check_table(table);

    const auto order = visit_order(table.feature_names, cfg.cycle_order);
    std::vector<BinnedColumn> columns(table.feature_count());
    parallel_for(columns.size(), cfg.jobs, [&](std::size_t f) { columns[f] = bin_column(table.columns[f], cfg.max_bins_1d); });

    const auto n_bags = static_cast<std::size_t>(cfg.outer_bags);
    std::vector<MainStageResult> bags(n_bags);
    std::vector<BagSplit> splits(n_bags);
    parallel_for(n_bags, cfg.jobs, [&](std::size_t b) {
        splits[b] = make_bag_split(table.size(), cfg, static_cast<int>(b));
        bags[b] = boost_mains(columns, order, table.targets, splits[b], cfg);
    });

    // Population counts for centering, shared by every bag.
    std::vector<std::vector<double>> counts(columns.size());
    for (std::size_t f = 0; f < columns.size(); ++f) {
        counts[f].assign(columns[f].edges.bin_count(), 0.0);
        for (auto b : columns[f].bins) counts[f][b] += 1.0;
    }

    // Center each bag, then merge: mean score per bin, population standard
    // deviation across bags as the error bar.
    std::vector<double> intercepts(n_bags);
    for (std::size_t b = 0; b < n_bags; ++b) {
        intercepts[b] = bags[b].intercept;
        for (auto f : order) {
            auto& sc = bags[b].scores[f];
            double wsum = 0.0, ssum = 0.0;
            for (std::size_t k = 0; k < sc.size(); ++k) {
                wsum += counts[f][k];
                ssum += counts[f][k] * sc[k];
            }
            const double mean = ssum / wsum;
            for (double& s : sc) s -= mean;
            intercepts[b] += mean;
        }
    }

    EbmModel model;
    model.intercept = std::accumulate(intercepts.begin(), intercepts.end(), 0.0) / static_cast<double>(n_bags);
    // Terms follow the visit order, so a permuted table yields the same model.
    for (auto f : order) {
        Term1D t;
        t.feature = table.feature_names[f];
        t.bins = columns[f].edges;
        const std::size_t nb = t.bins.bin_count();
        t.scores.assign(nb, 0.0);
        t.error_bars.assign(nb, 0.0);
        t.edited_mask.assign(nb, false);
        for (std::size_t k = 0; k < nb; ++k) {
            double mean = 0.0;
            for (const auto& bag : bags) mean += bag.scores[f][k];
            mean /= static_cast<double>(n_bags);
            double var = 0.0;
            for (const auto& bag : bags) var += (bag.scores[f][k] - mean) * (bag.scores[f][k] - mean);
            t.scores[k] = mean;
            t.error_bars[k] = std::sqrt(var / static_cast<double>(n_bags));
        }
        model.terms1d.push_back(std::move(t));
    }

    FitResult result;
    result.report.bags.resize(n_bags);
    for (std::size_t b = 0; b < n_bags; ++b) {
        result.report.bags[b].bag = static_cast<int>(b);
        result.report.bags[b].mains = std::move(bags[b].trace);
    }

    // Residual state of the merged main-effect model, summed in visit order.
    std::vector<double> base(table.size(), model.intercept);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& sc = model.terms1d[k].scores;
        const auto& bins = columns[order[k]].bins;
        for (std::size_t i = 0; i < base.size(); ++i) base[i] += sc[bins[i]];
    }

    if (cfg.pair_budget(table.feature_count()) > 0) {
        model.terms2d = fit_pairs(table, base, cfg, &result.report);
        model = mean_center(model, bin_populations(model, table));
    } else if (table.feature_count() >= 2) {
        result.report.pair_ranking = rank_pairs(table, base, cfg);
    }

    model.version = 1;
    model.validate();
    result.model = std::move(model);
    return result;
}

}  // namespace glassbox
