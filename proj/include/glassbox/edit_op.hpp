#pragma once

#include <limits>
#include <optional>
#include <string>

namespace glassbox {

enum class EditKind { FlattenRange, Scale, Shift, SetValue };

const char* to_string(EditKind kind);
EditKind edit_kind_from_string(const std::string& text);

// Closed feature-value interval; either end may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool operator==(const Interval&) const = default;
};

// One human edit of one term. Field use by kind:
//   flatten_range: value, or min_in_range when value is unset
//   scale:         factor
//   shift:         delta
//   set_value:     value (required)
// For 1D terms `range` selects bins; for 2D terms `range` applies to the x
// feature and `range_y` to the y feature. Unset ranges cover every bin.
struct EditOp {
    EditKind kind = EditKind::Shift;
    std::string term;
    std::optional<Interval> range;
    std::optional<Interval> range_y;
    double factor = 1.0;
    double delta = 0.0;
    std::optional<double> value;
    std::string author;
    std::string note;
    std::string applied_at;

    // Throws ValidationError when kind-specific fields are missing or bad.
    void validate() const;

    bool operator==(const EditOp&) const = default;
};

}  // namespace glassbox
