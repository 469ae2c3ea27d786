#include "splitcall/schema.hpp"

#include <cstdint>
#include <optional>

#include <cmath>

namespace splitcall::schema {

namespace {

std::string type_name(const json& value) {
    switch (value.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "unknown";
    }
}

bool matches_type(const std::string& expected, const json& value) {
    if (expected == "integer") {
        if (value.is_number_integer()) {
            return true;
        }
        return value.is_number_float() && std::floor(value.get<double>()) == value.get<double>();
    }
    if (expected == "number") {
        return value.is_number();
    }
    return type_name(value) == expected;
}

std::string join_location(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

// Integer-valued keyword; literals like 1 parse as signed, so accept both.
std::optional<std::size_t> count_limit(const json& schema, const char* key) {
    auto it = schema.find(key);
    if (it == schema.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) return std::nullopt;
    return it->get<std::size_t>();
}

std::string at(const std::string& location) {
    return location.empty() ? "" : " at " + location;
}

void check(const json& schema, const json& value, const std::string& location,
           std::vector<std::string>& out) {
    if (!schema.is_object()) {
        return;
    }

    if (auto it = schema.find("type"); it != schema.end()) {
        std::vector<std::string> allowed;
        if (it->is_string()) {
            allowed.push_back(it->get<std::string>());
        } else if (it->is_array()) {
            for (const auto& t : *it) {
                if (t.is_string()) {
                    allowed.push_back(t.get<std::string>());
                }
            }
        }
        bool ok = allowed.empty();
        for (const auto& t : allowed) {
            ok = ok || matches_type(t, value);
        }
        if (!ok) {
            std::string expected;
            for (std::size_t i = 0; i < allowed.size(); ++i) {
                expected += (i ? "|" : "") + allowed[i];
            }
            out.push_back("type mismatch" + at(location) + ": expected " + expected + ", got " +
                          type_name(value));
            return;
        }
    }

    if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
        bool found = false;
        for (const auto& option : *it) {
            found = found || option == value;
        }
        if (!found) {
            out.push_back("value not allowed" + at(location) + ": " + canonical_dump(value));
        }
    }

    if (value.is_string()) {
        if (auto limit = count_limit(schema, "minLength")) {
            if (codepoint_count(value.get_ref<const std::string&>()) < *limit) {
                out.push_back("string too short" + at(location));
            }
        }
    }

    if (value.is_number()) {
        double v = value.get<double>();
        if (auto it = schema.find("minimum"); it != schema.end() && it->is_number() &&
                                              v < it->get<double>()) {
            out.push_back("below minimum" + at(location) + ": " + canonical_dump(value));
        }
        if (auto it = schema.find("maximum"); it != schema.end() && it->is_number() &&
                                              v > it->get<double>()) {
            out.push_back("above maximum" + at(location) + ": " + canonical_dump(value));
        }
    }

    if (value.is_array()) {
        if (auto limit = count_limit(schema, "minItems"); limit && value.size() < *limit) {
            out.push_back("too few items" + at(location));
        }
        if (auto limit = count_limit(schema, "maxItems"); limit && value.size() > *limit) {
            out.push_back("too many items" + at(location));
        }
        if (auto it = schema.find("items"); it != schema.end() && it->is_object()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                check(*it, value[i], location + "[" + std::to_string(i) + "]", out);
            }
        }
    }

    if (value.is_object()) {
        const json empty = json::object();
        auto props_it = schema.find("properties");
        const json& properties =
            (props_it != schema.end() && props_it->is_object()) ? *props_it : empty;

        if (auto it = schema.find("required"); it != schema.end() && it->is_array()) {
            for (const auto& name : *it) {
                if (name.is_string() && !value.contains(name.get<std::string>())) {
                    out.push_back("missing required: " +
                                  join_location(location, name.get<std::string>()));
                }
            }
        }

        auto extra_it = schema.find("additionalProperties");
        for (const auto& [key, child] : value.items()) {
            if (auto p = properties.find(key); p != properties.end()) {
                check(*p, child, join_location(location, key), out);
                continue;
            }
            if (extra_it == schema.end()) {
                continue;
            }
            if (extra_it->is_boolean() && !extra_it->get<bool>()) {
                out.push_back("unknown key: " + join_location(location, key));
            } else if (extra_it->is_object()) {
                check(*extra_it, child, join_location(location, key), out);
            }
        }
    }
}

} // namespace

std::vector<std::string> validate(const json& schema, const json& value) {
    std::vector<std::string> violations;
    check(schema, value, "", violations);
    return violations;
}

std::vector<std::string> check_tool_schema(const json& schema) {
    std::vector<std::string> problems;
    if (!schema.is_object()) {
        problems.push_back("schema is not an object");
        return problems;
    }
    if (schema.value("type", std::string{}) != "object") {
        problems.push_back("schema type must be \"object\"");
    }
    auto props = schema.find("properties");
    if (props == schema.end() || !props->is_object()) {
        problems.push_back("schema must declare a properties object");
        return problems;
    }
    if (auto req = schema.find("required"); req != schema.end()) {
        if (!req->is_array()) {
            problems.push_back("required must be an array");
        } else {
            for (const auto& name : *req) {
                if (!name.is_string() || !props->contains(name.get<std::string>())) {
                    problems.push_back("required parameter not declared: " + canonical_dump(name));
                }
            }
        }
    }
    return problems;
}

} // namespace splitcall::schema
