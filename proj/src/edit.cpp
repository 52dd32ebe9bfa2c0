#include "glassbox/edit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glassbox/errors.hpp"

namespace glassbox {

namespace {

constexpr double kDiffTolerance = 1e-12;

std::vector<std::size_t> affected_1d(const Term1D& term, const EditOp& op) {
    Interval r = op.range.value_or(Interval{});
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < term.bins.bin_count(); ++b) {
        if (term.bins.bin_intersects(b, r.lo, r.hi)) out.push_back(b);
    }
    return out;
}

std::vector<std::size_t> affected_2d(const Term2D& term, const EditOp& op) {
    Interval rx = op.range.value_or(Interval{});
    Interval ry = op.range_y.value_or(Interval{});
    std::vector<std::size_t> out;
    for (std::size_t bx = 0; bx < term.bins_x.bin_count(); ++bx) {
        if (!term.bins_x.bin_intersects(bx, rx.lo, rx.hi)) continue;
        for (std::size_t by = 0; by < term.bins_y.bin_count(); ++by) {
            if (term.bins_y.bin_intersects(by, ry.lo, ry.hi)) out.push_back(term.cell(bx, by));
        }
    }
    return out;
}

void edit_scores(std::vector<double>& scores, const std::vector<std::size_t>& bins, const EditOp& op) {
    double flat_value = 0.0;
    if (op.kind == EditKind::FlattenRange) {
        if (op.value) {
            flat_value = *op.value;
        } else {
            flat_value = std::numeric_limits<double>::infinity();
            for (auto b : bins) flat_value = std::min(flat_value, scores[b]);
        }
    }
    for (auto b : bins) {
        switch (op.kind) {
            case EditKind::FlattenRange: scores[b] = flat_value; break;
            case EditKind::Scale: scores[b] *= op.factor; break;
            case EditKind::Shift: scores[b] += op.delta; break;
            case EditKind::SetValue: scores[b] = *op.value; break;
        }
    }
}

}  // namespace

std::vector<std::size_t> affected_bins(const EbmModel& model, const EditOp& op) {
    auto index = model.find_term(op.term);
    if (!index) throw NotFoundError("edit targets unknown term '" + op.term + "'");
    if (*index < model.terms1d.size()) {
        if (op.range_y) throw ValidationError("range_y only applies to pair terms");
        return affected_1d(model.terms1d[*index], op);
    }
    return affected_2d(model.terms2d[*index - model.terms1d.size()], op);
}

EbmModel apply_edit(const EbmModel& model, const EditOp& op) {
    op.validate();
    auto bins = affected_bins(model, op);
    if (bins.empty()) throw ValidationError("edit range of '" + op.term + "' overlaps no bin");

    EbmModel out = model;
    auto index = *out.find_term(op.term);
    if (index < out.terms1d.size()) {
        auto& term = out.terms1d[index];
        edit_scores(term.scores, bins, op);
        for (auto b : bins) {
            term.edited_mask[b] = true;
            term.error_bars[b].reset();
        }
    } else {
        auto& term = out.terms2d[index - out.terms1d.size()];
        edit_scores(term.scores, bins, op);
        for (auto b : bins) term.edited_mask[b] = true;
    }
    out.parent_version = model.version;
    out.version = model.version + 1;
    out.edit_log.push_back(op);
    out.validate();
    return out;
}

EbmModel apply_edits(const EbmModel& model, std::span<const EditOp> ops) {
    EbmModel current = model;
    for (const auto& op : ops) current = apply_edit(current, op);
    return current;
}

std::vector<TermDiff> diff(const EbmModel& a, const EbmModel& b) {
    if (a.terms1d.size() != b.terms1d.size() || a.terms2d.size() != b.terms2d.size()) {
        throw ValidationError("diff needs models with the same term structure");
    }
    std::vector<TermDiff> out;
    auto compare = [&](const std::string& id, const std::vector<double>& sa, const std::vector<double>& sb) {
        TermDiff d{id, {}};
        for (std::size_t k = 0; k < sa.size(); ++k) {
            if (std::abs(sa[k] - sb[k]) > kDiffTolerance) d.bins.push_back({k, sa[k], sb[k]});
        }
        if (!d.bins.empty()) out.push_back(std::move(d));
    };
    for (std::size_t i = 0; i < a.terms1d.size(); ++i) {
        const auto& ta = a.terms1d[i];
        const auto& tb = b.terms1d[i];
        if (ta.feature != tb.feature || ta.bins != tb.bins) {
            throw ValidationError("diff: term '" + ta.feature + "' differs in feature or bin edges");
        }
        compare(ta.feature, ta.scores, tb.scores);
    }
    for (std::size_t i = 0; i < a.terms2d.size(); ++i) {
        const auto& ta = a.terms2d[i];
        const auto& tb = b.terms2d[i];
        if (ta.feature_x != tb.feature_x || ta.feature_y != tb.feature_y || ta.bins_x != tb.bins_x ||
            ta.bins_y != tb.bins_y) {
            throw ValidationError("diff: pair term '" + pair_term_id(ta.feature_x, ta.feature_y) +
                                  "' differs in features or bin edges");
        }
        compare(pair_term_id(ta.feature_x, ta.feature_y), ta.scores, tb.scores);
    }
    return out;
}

EbmModel replay(const EbmModel& base, const EbmModel& head) {
    if (head.edit_log.size() < base.edit_log.size() ||
        !std::equal(base.edit_log.begin(), base.edit_log.end(), head.edit_log.begin())) {
        throw ValidationError("head's edit log does not extend the base model's log");
    }
    std::span<const EditOp> tail(head.edit_log.begin() + static_cast<std::ptrdiff_t>(base.edit_log.size()),
                                 head.edit_log.end());
    return apply_edits(base, tail);
}

}  // namespace glassbox
