#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/adapter.hpp"
#include "splitcall/backends.hpp"
#include "splitcall/orchestrator.hpp"
#include "splitcall/toolhub.hpp"

namespace splitcall {

struct BackendSpec {
    // "mock:<script path>" or an http(s) base URL of a chat-completions server.
    std::string url;
    std::string api_key;
    std::optional<std::string> model;
    StructuredOutput structured_output = StructuredOutput::vllm_guided;
    std::chrono::milliseconds timeout{120000};

    bool is_mock() const { return url.rfind("mock:", 0) == 0; }
};

struct AppConfig {
    std::vector<ToolsetConfig> toolsets;
    BackendSpec backend;
    std::filesystem::path adapter_manifest;  // empty when not configured
    AdapterPlan plan = AdapterPlan::decoupled;
    std::size_t adapter_cache_capacity = 8;
    SessionConfig session;

    // Throws invalid-config: no toolsets, duplicate ids, zero cache capacity,
    // bad session values.
    void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

// TOML config. Relative paths (allowed roots, manifest, mock scripts) are
// resolved against `base_dir`. ORCH_* variables from `env` override file
// values. Throws invalid-config or parse-error.
AppConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                       const EnvLookup& env = process_env);
AppConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

// "mock:<path>" yields a ScriptedBackend, anything else an OpenAiBackend.
std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

// Registers every configured toolset on `hub`.
void register_toolsets(ToolHub& hub, const AppConfig& config);

} // namespace splitcall
