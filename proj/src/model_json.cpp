#include "glassbox/model_json.hpp"

#include <cmath>
#include <limits>

#include "glassbox/errors.hpp"

namespace glassbox {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json interval_to_json(const Interval& r) {
    return json::array({std::isinf(r.lo) ? json(nullptr) : json(r.lo), std::isinf(r.hi) ? json(nullptr) : json(r.hi)});
}

double bound_from_json(const json& j, double if_null) {
    if (j.is_null()) return if_null;
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "-inf" || s == "-Infinity") return -kInf;
        if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
        throw ValidationError("bad interval bound '" + s + "'");
    }
    if (!j.is_number()) throw ValidationError("interval bounds must be numbers or null");
    return j.get<double>();
}

Interval interval_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("an edit range must be a [lo, hi] array");
    return Interval{bound_from_json(j[0], -kInf), bound_from_json(j[1], kInf)};
}

json bool_array(const std::vector<bool>& v) {
    json out = json::array();
    for (bool b : v) out.push_back(b);
    return out;
}

std::vector<bool> bool_array_from_json(const json& j) {
    std::vector<bool> out;
    for (const auto& e : j) out.push_back(e.get<bool>());
    return out;
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const EditOp& op) {
    json j{{"kind", to_string(op.kind)}, {"term", op.term}};
    j["range"] = op.range ? interval_to_json(*op.range) : json(nullptr);
    if (op.range_y) j["range_y"] = interval_to_json(*op.range_y);
    j["factor"] = op.factor;
    j["delta"] = op.delta;
    if (op.value) {
        j["value"] = *op.value;
    } else {
        j["value"] = op.kind == EditKind::FlattenRange ? json("min_in_range") : json(nullptr);
    }
    j["author"] = op.author;
    j["note"] = op.note;
    j["applied_at"] = op.applied_at;
    return j;
}

EditOp edit_op_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("edit op must be a JSON object");
    EditOp op;
    op.kind = edit_kind_from_string(field<std::string>(j, "kind"));
    op.term = field<std::string>(j, "term");
    if (j.contains("range") && !j["range"].is_null()) {
        const auto& r = j["range"];
        if (r.is_object()) {
            if (r.contains("x") && !r["x"].is_null()) op.range = interval_from_json(r["x"]);
            if (r.contains("y") && !r["y"].is_null()) op.range_y = interval_from_json(r["y"]);
        } else {
            op.range = interval_from_json(r);
        }
    }
    if (j.contains("range_y") && !j["range_y"].is_null()) op.range_y = interval_from_json(j["range_y"]);
    if (j.contains("factor")) op.factor = field<double>(j, "factor");
    if (j.contains("delta")) op.delta = field<double>(j, "delta");
    if (j.contains("value") && !j["value"].is_null()) {
        const auto& v = j["value"];
        if (v.is_string()) {
            if (v.get<std::string>() != "min_in_range") {
                throw ValidationError("edit value must be a number or \"min_in_range\"");
            }
        } else if (v.is_number()) {
            op.value = v.get<double>();
        } else {
            throw ValidationError("edit value must be a number or \"min_in_range\"");
        }
    }
    op.author = j.value("author", std::string{});
    op.note = j.value("note", std::string{});
    op.applied_at = j.value("applied_at", std::string{});
    op.validate();
    return op;
}

std::vector<EditOp> edit_ops_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("edit ops must be a JSON array");
    std::vector<EditOp> ops;
    for (const auto& e : j) ops.push_back(edit_op_from_json(e));
    return ops;
}

json to_json(const Term1D& t) {
    json bars = json::array();
    for (const auto& e : t.error_bars) bars.push_back(e ? json(*e) : json(nullptr));
    return json{{"feature", t.feature},
                {"edges", t.bins.edges},
                {"scores", t.scores},
                {"error_bars", std::move(bars)},
                {"edited_mask", bool_array(t.edited_mask)}};
}

json to_json(const Term2D& t) {
    return json{{"feature_x", t.feature_x},
                {"feature_y", t.feature_y},
                {"edges_x", t.bins_x.edges},
                {"edges_y", t.bins_y.edges},
                {"scores", t.scores},
                {"edited_mask", bool_array(t.edited_mask)}};
}

Term1D term1d_from_json(const json& j) {
    Term1D t;
    t.feature = field<std::string>(j, "feature");
    t.bins.edges = field<std::vector<double>>(j, "edges");
    t.scores = field<std::vector<double>>(j, "scores");
    for (const auto& e : field<json>(j, "error_bars")) {
        t.error_bars.push_back(e.is_null() ? std::nullopt : std::optional<double>(e.get<double>()));
    }
    t.edited_mask = bool_array_from_json(field<json>(j, "edited_mask"));
    t.validate();
    return t;
}

Term2D term2d_from_json(const json& j) {
    Term2D t;
    t.feature_x = field<std::string>(j, "feature_x");
    t.feature_y = field<std::string>(j, "feature_y");
    t.bins_x.edges = field<std::vector<double>>(j, "edges_x");
    t.bins_y.edges = field<std::vector<double>>(j, "edges_y");
    t.scores = field<std::vector<double>>(j, "scores");
    t.edited_mask = bool_array_from_json(field<json>(j, "edited_mask"));
    t.validate();
    return t;
}

json to_json(const EbmModel& m) {
    json terms1d = json::array();
    for (const auto& t : m.terms1d) terms1d.push_back(to_json(t));
    json terms2d = json::array();
    for (const auto& t : m.terms2d) terms2d.push_back(to_json(t));
    json log = json::array();
    for (const auto& op : m.edit_log) log.push_back(to_json(op));
    return json{{"schema_version", kModelSchemaVersion},
                {"intercept", m.intercept},
                {"link", m.link},
                {"terms1d", std::move(terms1d)},
                {"terms2d", std::move(terms2d)},
                {"feature_config_ref", m.feature_config_ref},
                {"version", m.version},
                {"parent_version", m.parent_version ? json(*m.parent_version) : json(nullptr)},
                {"edit_log", std::move(log)}};
}

EbmModel model_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("model must be a JSON object");
    auto schema = field<int>(j, "schema_version");
    if (schema != kModelSchemaVersion) {
        throw ValidationError("model schema_version " + std::to_string(schema) + " is not supported (expected " +
                              std::to_string(kModelSchemaVersion) + ")");
    }
    EbmModel m;
    m.intercept = field<double>(j, "intercept");
    m.link = field<std::string>(j, "link");
    for (const auto& t : field<json>(j, "terms1d")) m.terms1d.push_back(term1d_from_json(t));
    for (const auto& t : field<json>(j, "terms2d")) m.terms2d.push_back(term2d_from_json(t));
    m.feature_config_ref = j.value("feature_config_ref", std::string{});
    m.version = field<std::int64_t>(j, "version");
    if (j.contains("parent_version") && !j["parent_version"].is_null()) {
        m.parent_version = field<std::int64_t>(j, "parent_version");
    }
    if (j.contains("edit_log")) {
        for (const auto& op : j["edit_log"]) m.edit_log.push_back(edit_op_from_json(op));
    }
    m.validate();
    return m;
}

std::string serialize(const EbmModel& model) { return to_json(model).dump(1) + "\n"; }

EbmModel deserialize(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError("model JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace glassbox
