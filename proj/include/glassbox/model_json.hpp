#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glassbox/model.hpp"

namespace glassbox {

// Infinite interval ends are written as null.
nlohmann::json to_json(const EditOp& op);
EditOp edit_op_from_json(const nlohmann::json& j);
std::vector<EditOp> edit_ops_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Term1D& term);
nlohmann::json to_json(const Term2D& term);
Term1D term1d_from_json(const nlohmann::json& j);
Term2D term2d_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EbmModel& model);
EbmModel model_from_json(const nlohmann::json& j);

// Canonical text form; doubles are printed with round-trip precision.
std::string serialize(const EbmModel& model);
// Throws ParseError on malformed or truncated text, ValidationError on a
// schema-version mismatch or broken invariants.
EbmModel deserialize(std::string_view text);

}  // namespace glassbox
