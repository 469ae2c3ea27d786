#pragma once

#include <string>
#include <vector>

#include "splitcall/json_util.hpp"

namespace splitcall::schema {

// Checks `value` against the subset of JSON Schema that tool definitions use:
// type (single or list), properties, required, additionalProperties (bool or
// schema), enum, items, minItems/maxItems, minimum/maximum, minLength.
// Returns one human-readable message per violation; empty means valid.
std::vector<std::string> validate(const json& schema, const json& value);

// Structural checks on a tool's argument schema: must declare an object
// with a properties map, and every required name must be a declared property.
std::vector<std::string> check_tool_schema(const json& schema);

} // namespace splitcall::schema
