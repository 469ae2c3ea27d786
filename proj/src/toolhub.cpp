#include "splitcall/toolhub.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/error.hpp"
#include "splitcall/mcp_client.hpp"
#include "splitcall/schema.hpp"

namespace splitcall {

json to_json(const ToolSpec& spec) {
    return json{{"toolset_id", spec.toolset_id},
                {"name", spec.name},
                {"description", spec.description},
                {"schema", spec.schema}};
}

ToolSpec tool_spec_from_json(const json& j) {
    ToolSpec spec;
    spec.toolset_id = j.value("toolset_id", std::string{});
    spec.name = j.at("name").get<std::string>();
    spec.description = j.value("description", std::string{});
    spec.schema = j.value("schema", json::object());
    return spec;
}

void SandboxPolicy::validate(bool requires_roots) const {
    if (timeout.count() <= 0) {
        throw Error(Errc::invalid_config, "sandbox timeout must be positive");
    }
    if (max_output_bytes < kTruncationMarker.size()) {
        throw Error(Errc::invalid_config, "max_output_bytes must be at least " +
                                              std::to_string(kTruncationMarker.size()));
    }
    if (requires_roots && allowed_roots.empty()) {
        throw Error(Errc::invalid_config, "toolset requires at least one allowed root");
    }
}

std::string_view to_string(ToolStatus status) noexcept {
    switch (status) {
    case ToolStatus::ok: return "ok";
    case ToolStatus::error: return "error";
    case ToolStatus::timeout: return "timeout";
    }
    return "error";
}

ToolStatus tool_status_from_string(std::string_view text) {
    if (text == "ok") return ToolStatus::ok;
    if (text == "error") return ToolStatus::error;
    if (text == "timeout") return ToolStatus::timeout;
    throw Error(Errc::parse_error, "unknown tool status: " + std::string(text));
}

json to_json(const ToolResult& result) {
    return json{{"status", to_string(result.status)},
                {"payload", result.payload},
                {"truncated", result.truncated},
                {"elapsed_ms", result.elapsed.count()}};
}

ToolResult tool_result_from_json(const json& j) {
    ToolResult result;
    result.status = tool_status_from_string(j.at("status").get<std::string>());
    result.payload = j.at("payload").get<std::string>();
    result.truncated = j.value("truncated", false);
    result.elapsed = std::chrono::milliseconds(j.value("elapsed_ms", std::int64_t{0}));
    return result;
}

ToolResult cap_output(ToolResult result, std::size_t max_bytes) {
    if (result.payload.size() <= max_bytes) {
        return result;
    }
    if (max_bytes < kTruncationMarker.size()) {
        result.payload = std::string(kTruncationMarker.substr(0, max_bytes));
        result.truncated = true;
        return result;
    }
    std::size_t keep = max_bytes - kTruncationMarker.size();
    // don't split a UTF-8 sequence
    while (keep > 0 && (static_cast<unsigned char>(result.payload[keep]) & 0xC0) == 0x80) --keep;
    result.payload.resize(keep);
    result.payload.append(kTruncationMarker);
    result.truncated = true;
    return result;
}

std::string_view to_string(Transport transport) noexcept {
    return transport == Transport::builtin ? "builtin" : "stdio-subprocess";
}

Transport transport_from_string(std::string_view text) {
    if (text == "builtin") return Transport::builtin;
    if (text == "stdio-subprocess" || text == "stdio") return Transport::stdio_subprocess;
    throw Error(Errc::invalid_config, "unknown transport: " + std::string(text));
}

ValidationReport validate_arguments(const ToolSpec& spec, const json& arguments) {
    ValidationReport report;
    if (!arguments.is_object()) {
        report.violations.push_back("arguments must be a JSON object");
        return report;
    }
    report.violations = schema::validate(spec.schema, arguments);
    return report;
}

// --- Catalog ---------------------------------------------------------------

const ToolSpec* Catalog::find(const std::string& toolset_id, const std::string& tool) const {
    auto ts = toolsets.find(toolset_id);
    if (ts == toolsets.end()) {
        return nullptr;
    }
    for (const auto& spec : ts->second.tools) {
        if (spec.name == tool) {
            return &spec;
        }
    }
    return nullptr;
}

const ToolSpec& Catalog::spec(const std::string& toolset_id, const std::string& tool) const {
    if (!toolsets.count(toolset_id)) {
        throw Error(Errc::unknown_toolset, "unknown toolset: " + toolset_id);
    }
    if (const auto* found = find(toolset_id, tool)) {
        return *found;
    }
    throw Error(Errc::unknown_tool, "unknown tool: " + toolset_id + "/" + tool);
}

std::vector<std::string> Catalog::toolset_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, info] : toolsets) {
        ids.push_back(id);
    }
    return ids;
}

std::vector<std::string> Catalog::all_tool_names() const {
    std::set<std::string> names;
    for (const auto& [id, info] : toolsets) {
        for (const auto& spec : info.tools) {
            names.insert(spec.name);
        }
    }
    return {names.begin(), names.end()};
}

std::size_t Catalog::tool_count() const {
    std::size_t n = 0;
    for (const auto& [id, info] : toolsets) {
        n += info.tools.size();
    }
    return n;
}

json to_json(const Catalog& catalog) {
    json out = json::object();
    for (const auto& [id, info] : catalog.toolsets) {
        json tools = json::array();
        for (const auto& spec : info.tools) {
            tools.push_back(to_json(spec));
        }
        out[id] = json{{"description", info.description}, {"tools", tools}};
    }
    return json{{"toolsets", out}};
}

Catalog catalog_from_json(const json& j) {
    Catalog catalog;
    for (const auto& [id, info] : j.at("toolsets").items()) {
        ToolsetInfo ts;
        ts.description = info.value("description", std::string{});
        for (const auto& t : info.at("tools")) {
            auto spec = tool_spec_from_json(t);
            spec.toolset_id = id;
            ts.tools.push_back(std::move(spec));
        }
        std::sort(ts.tools.begin(), ts.tools.end(),
                  [](const ToolSpec& a, const ToolSpec& b) { return a.name < b.name; });
        catalog.toolsets.emplace(id, std::move(ts));
    }
    return catalog;
}

// --- ToolHub ---------------------------------------------------------------

std::vector<ToolSpec> ToolsetHandle::list_tools() const { return hub_->list_tools(id_); }

ToolResult ToolsetHandle::invoke(const std::string& tool, const json& arguments) const {
    return hub_->invoke(id_, tool, arguments);
}

std::unique_ptr<Toolset> default_toolset_factory(const ToolsetConfig& config) {
    if (config.transport == Transport::stdio_subprocess) {
        return std::make_unique<StdioMcpToolset>(config.toolset_id, config.command, config.sandbox);
    }
    return make_builtin_toolset(config.command.empty() ? config.toolset_id : config.command);
}

ToolHub::ToolHub() : ToolHub(default_toolset_factory) {}

ToolHub::ToolHub(Factory factory) : factory_(std::move(factory)) {}

ToolsetHandle ToolHub::register_toolset(const ToolsetConfig& config) {
    {
        std::shared_lock lock(mutex_);
        if (entries_.count(config.toolset_id)) {
            throw Error(Errc::duplicate_id, "toolset already registered: " + config.toolset_id);
        }
    }
    return register_toolset(config, factory_(config));
}

ToolsetHandle ToolHub::register_toolset(const ToolsetConfig& config,
                                        std::unique_ptr<Toolset> toolset) {
    if (config.toolset_id.empty() || config.toolset_id.find(':') != std::string::npos) {
        throw Error(Errc::invalid_config, "invalid toolset id: '" + config.toolset_id + "'");
    }
    config.sandbox.validate(toolset->requires_allowed_roots());

    auto entry = std::make_shared<Entry>();
    entry->config = config;
    entry->description =
        config.description.empty() ? toolset->description() : config.description;
    entry->tools = toolset->tools();
    std::set<std::string> seen;
    for (auto& spec : entry->tools) {
        spec.toolset_id = config.toolset_id;
        if (!seen.insert(spec.name).second) {
            throw Error(Errc::invalid_config,
                        "duplicate tool '" + spec.name + "' in toolset " + config.toolset_id);
        }
        if (spec.name == "summarize") {
            throw Error(Errc::invalid_config, "tool name 'summarize' is reserved");
        }
        if (auto problems = schema::check_tool_schema(spec.schema); !problems.empty()) {
            throw Error(Errc::invalid_config,
                        "tool " + spec.name + " has an invalid schema: " + problems.front());
        }
    }
    std::sort(entry->tools.begin(), entry->tools.end(),
              [](const ToolSpec& a, const ToolSpec& b) { return a.name < b.name; });
    entry->toolset = std::move(toolset);

    std::unique_lock lock(mutex_);
    if (!entries_.emplace(config.toolset_id, std::move(entry)).second) {
        throw Error(Errc::duplicate_id, "toolset already registered: " + config.toolset_id);
    }
    return ToolsetHandle(*this, config.toolset_id);
}

std::shared_ptr<ToolHub::Entry> ToolHub::entry(const std::string& toolset_id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(toolset_id);
    if (it == entries_.end()) {
        throw Error(Errc::unknown_toolset, "unknown toolset: " + toolset_id);
    }
    return it->second;
}

std::vector<ToolSpec> ToolHub::list_tools(const std::string& toolset_id) const {
    return entry(toolset_id)->tools;
}

const ToolSpec& ToolHub::spec(const std::string& toolset_id, const std::string& tool) const {
    auto e = entry(toolset_id);
    for (const auto& spec : e->tools) {
        if (spec.name == tool) {
            return spec;  // entries are never removed, so the reference stays valid
        }
    }
    throw Error(Errc::unknown_tool, "unknown tool: " + toolset_id + "/" + tool);
}

std::vector<std::string> ToolHub::toolset_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, e] : entries_) {
        ids.push_back(id);
    }
    return ids;
}

const ToolsetConfig& ToolHub::config(const std::string& toolset_id) const {
    return entry(toolset_id)->config;
}

Catalog ToolHub::catalog() const {
    std::shared_lock lock(mutex_);
    Catalog catalog;
    for (const auto& [id, e] : entries_) {
        catalog.toolsets.emplace(id, ToolsetInfo{e->description, e->tools});
    }
    return catalog;
}

ToolResult ToolHub::invoke(const std::string& toolset_id, const std::string& tool,
                           const json& arguments, const SandboxPolicy& policy) {
    auto e = entry(toolset_id);
    const ToolSpec& found = spec(toolset_id, tool);
    if (auto report = validate_arguments(found, arguments); !report.ok()) {
        std::string message = "invalid arguments for " + tool + ":";
        for (const auto& v : report.violations) {
            message += " " + v + ";";
        }
        throw Error(Errc::invalid_arguments, message);
    }
    policy.validate(e->toolset->requires_allowed_roots());
    return cap_output(e->toolset->call(found, arguments, policy), policy.max_output_bytes);
}

ToolResult ToolHub::invoke(const std::string& toolset_id, const std::string& tool,
                           const json& arguments) {
    return invoke(toolset_id, tool, arguments, entry(toolset_id)->config.sandbox);
}

} // namespace splitcall
