#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glassbox/model.hpp"

namespace glassbox {

// Returns a new model version with `op` applied; the input is not modified.
// A bin is affected when its interval intersects the edit range (edits snap
// outward to bin edges). Affected bins are marked edited and lose their
// error bars; every other bin keeps its exact bits.
EbmModel apply_edit(const EbmModel& model, const EditOp& op);

// Applies ops in order; an empty list returns the model unchanged.
EbmModel apply_edits(const EbmModel& model, std::span<const EditOp> ops);

// Bins of a term touched by an op, as flat indices (row-major for 2D).
std::vector<std::size_t> affected_bins(const EbmModel& model, const EditOp& op);

struct BinDiff {
    std::size_t bin = 0;  // flat index; row-major cell for 2D terms
    double score_a = 0.0;
    double score_b = 0.0;
};

struct TermDiff {
    std::string term_id;
    std::vector<BinDiff> bins;
};

// Bins whose scores differ by more than 1e-12; terms without differences are
// omitted. Throws ValidationError if term structure or bin edges differ.
std::vector<TermDiff> diff(const EbmModel& a, const EbmModel& b);

// Re-applies the ops `head` logged after `base` was produced.
EbmModel replay(const EbmModel& base, const EbmModel& head);

}  // namespace glassbox
