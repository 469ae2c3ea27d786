#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/json_util.hpp"

namespace splitcall {

struct ToolSpec {
    std::string toolset_id;
    std::string name;
    std::string description;
    json schema;

    bool operator==(const ToolSpec&) const = default;
};

json to_json(const ToolSpec& spec);
ToolSpec tool_spec_from_json(const json& j);

struct SandboxPolicy {
    std::vector<std::filesystem::path> allowed_roots;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_output_bytes = 64 * 1024;

    // Throws invalid_config when the policy cannot be enforced.
    void validate(bool requires_roots) const;
};

enum class ToolStatus { ok, error, timeout };

std::string_view to_string(ToolStatus status) noexcept;
ToolStatus tool_status_from_string(std::string_view text);

struct ToolResult {
    ToolStatus status = ToolStatus::ok;
    std::string payload;
    bool truncated = false;
    std::chrono::milliseconds elapsed{0};

    bool operator==(const ToolResult&) const = default;
};

json to_json(const ToolResult& result);
ToolResult tool_result_from_json(const json& j);

inline constexpr std::string_view kTruncationMarker = "[truncated]";

// Caps `payload` at `max_bytes`. When it does not fit, the payload is cut at
// a UTF-8 boundary so that the content plus kTruncationMarker is at most
// max_bytes long (exactly, for ASCII content).
ToolResult cap_output(ToolResult result, std::size_t max_bytes);

enum class Transport { stdio_subprocess, builtin };

std::string_view to_string(Transport transport) noexcept;
Transport transport_from_string(std::string_view text);

struct ToolsetConfig {
    std::string toolset_id;
    Transport transport = Transport::builtin;
    // stdio: shell command line. builtin: kind name (defaults to toolset_id).
    std::string command;
    SandboxPolicy sandbox;
    std::string description;
};

// One toolset backend. Implementations do not need to cap output or check
// arguments; ToolHub does both around every call.
class Toolset {
public:
    virtual ~Toolset() = default;

    virtual std::vector<ToolSpec> tools() = 0;
    virtual ToolResult call(const ToolSpec& spec, const json& arguments,
                            const SandboxPolicy& policy) = 0;
    virtual std::string description() const { return {}; }
    virtual bool requires_allowed_roots() const { return false; }
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_arguments(const ToolSpec& spec, const json& arguments);

struct ToolsetInfo {
    std::string description;
    std::vector<ToolSpec> tools;  // sorted by name
};

// Static view of every registered tool; enough to rebuild any prompt without
// live toolsets (dataset extraction works from this).
struct Catalog {
    std::map<std::string, ToolsetInfo> toolsets;

    const ToolSpec& spec(const std::string& toolset_id, const std::string& tool) const;
    const ToolSpec* find(const std::string& toolset_id, const std::string& tool) const;
    std::vector<std::string> toolset_ids() const;
    std::vector<std::string> all_tool_names() const;
    std::size_t tool_count() const;
};

json to_json(const Catalog& catalog);
Catalog catalog_from_json(const json& j);

class ToolHub;

class ToolsetHandle {
public:
    ToolsetHandle(ToolHub& hub, std::string id) : hub_(&hub), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }
    std::vector<ToolSpec> list_tools() const;
    ToolResult invoke(const std::string& tool, const json& arguments) const;

private:
    ToolHub* hub_;
    std::string id_;
};

class ToolHub {
public:
    using Factory = std::function<std::unique_ptr<Toolset>(const ToolsetConfig&)>;

    // The default factory knows the builtin kinds and the stdio MCP client.
    ToolHub();
    explicit ToolHub(Factory factory);

    ToolsetHandle register_toolset(const ToolsetConfig& config);
    ToolsetHandle register_toolset(const ToolsetConfig& config, std::unique_ptr<Toolset> toolset);

    std::vector<ToolSpec> list_tools(const std::string& toolset_id) const;
    const ToolSpec& spec(const std::string& toolset_id, const std::string& tool) const;
    std::vector<std::string> toolset_ids() const;
    const ToolsetConfig& config(const std::string& toolset_id) const;
    Catalog catalog() const;

    // Validates arguments, runs the tool under `policy`, and caps the output.
    // Throws unknown-toolset, unknown-tool, invalid-arguments, sandbox-violation.
    ToolResult invoke(const std::string& toolset_id, const std::string& tool,
                      const json& arguments, const SandboxPolicy& policy);
    ToolResult invoke(const std::string& toolset_id, const std::string& tool,
                      const json& arguments);

private:
    struct Entry {
        ToolsetConfig config;
        std::unique_ptr<Toolset> toolset;
        std::string description;
        std::vector<ToolSpec> tools;
    };

    std::shared_ptr<Entry> entry(const std::string& toolset_id) const;

    Factory factory_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

std::unique_ptr<Toolset> default_toolset_factory(const ToolsetConfig& config);

} // namespace splitcall
