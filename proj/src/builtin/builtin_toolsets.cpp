#include "splitcall/builtin_toolsets.hpp"

#include "splitcall/error.hpp"

namespace splitcall {

namespace detail {

json object_schema(json properties, std::vector<std::string> required) {
    json schema{{"type", "object"},
                {"properties", std::move(properties)},
                {"additionalProperties", false}};
    if (!required.empty()) {
        schema["required"] = required;
    }
    return schema;
}

ToolSpec make_spec(std::string name, std::string description, json schema) {
    return ToolSpec{{}, std::move(name), std::move(description), std::move(schema)};
}

namespace {

class EmptyToolset : public Toolset {
public:
    std::vector<ToolSpec> tools() override { return {}; }
    ToolResult call(const ToolSpec& spec, const json&, const SandboxPolicy&) override {
        throw Error(Errc::unknown_tool, "unknown tool: " + spec.name);
    }
    std::string description() const override { return "A toolset with no tools."; }
};

} // namespace

} // namespace detail

std::unique_ptr<Toolset> make_builtin_toolset(const std::string& kind) {
    if (kind == "filesystem") return detail::make_filesystem_toolset();
    if (kind == "notion") return detail::make_notion_toolset();
    if (kind == "monday") return detail::make_monday_toolset();
    if (kind == "debug") return detail::make_debug_toolset();
    if (kind == "empty") return std::make_unique<detail::EmptyToolset>();
    throw Error(Errc::invalid_config, "unknown builtin toolset: " + kind);
}

std::vector<std::string> builtin_kinds() {
    return {"debug", "empty", "filesystem", "monday", "notion"};
}

} // namespace splitcall
