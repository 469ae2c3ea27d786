#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "splitcall/gateway.hpp"

namespace splitcall {

struct ScriptEntry {
    AdapterId adapter;
    std::string reply;

    bool operator==(const ScriptEntry&) const = default;
};

// Script file: one {"adapter": "<serialized id>", "reply": "<text>"} per line.
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);
void save_script(const std::filesystem::path& path, const std::vector<ScriptEntry>& script);

// In-process backend that replays a fixed script and records every request.
class ScriptedBackend : public Backend {
public:
    // Throws invalid-argument on an empty script.
    explicit ScriptedBackend(std::vector<ScriptEntry> script);

    // Throws script-exhausted past the end and adapter-mismatch when the
    // request adapter differs from the next entry's (entry not consumed).
    BackendReply generate(const CompletionRequest& request) override;

    std::vector<CompletionRequest> recorded() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::deque<ScriptEntry> script_;
    std::vector<CompletionRequest> recorded_;
};

// How structured-output hints are forwarded to an OpenAI-compatible server.
enum class StructuredOutput {
    none,             // gateway-side validation only
    vllm_guided,      // guided_choice / guided_json extension fields
    response_format,  // response_format: {type: json_schema}
};

std::string_view to_string(StructuredOutput mode) noexcept;
StructuredOutput structured_output_from_string(std::string_view text);

struct OpenAiConfig {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string api_key;
    // When set, sent as the model field instead of the serialized AdapterId.
    std::optional<std::string> model_override;
    StructuredOutput structured_output = StructuredOutput::vllm_guided;
    std::chrono::milliseconds timeout{120000};
};

// Chat-completions client. The request's AdapterId travels as the model name,
// which is how multi-adapter servers pick the adapter per request.
class OpenAiBackend : public Backend {
public:
    explicit OpenAiBackend(OpenAiConfig config);

    BackendReply generate(const CompletionRequest& request) override;
    bool native_constraints() const override;

    // Request body as sent over the wire. Exposed for tests.
    json build_body(const CompletionRequest& request) const;

private:
    OpenAiConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

} // namespace splitcall
