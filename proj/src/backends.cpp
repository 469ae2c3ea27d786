#include "splitcall/backends.hpp"

#include "httplib.h"

#include "splitcall/error.hpp"

namespace splitcall {

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
    std::vector<ScriptEntry> script;
    for (const auto& row : read_jsonl(path)) {
        try {
            script.push_back({AdapterId::parse(row.at("adapter").get<std::string>()),
                              row.at("reply").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(Errc::parse_error, path.string() + ": bad script entry: " + e.what());
        }
    }
    return script;
}

void save_script(const std::filesystem::path& path, const std::vector<ScriptEntry>& script) {
    std::string out;
    for (const auto& e : script) {
        out += canonical_dump(json{{"adapter", e.adapter.serialize()}, {"reply", e.reply}}) + "\n";
    }
    write_file_atomic(path, out);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script)
    : script_(script.begin(), script.end()) {
    if (script_.empty()) {
        throw Error(Errc::invalid_argument, "scripted backend needs at least one entry");
    }
}

BackendReply ScriptedBackend::generate(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    recorded_.push_back(request);
    if (script_.empty()) {
        throw Error(Errc::script_exhausted,
                    "script exhausted after " + std::to_string(recorded_.size() - 1) + " replies");
    }
    const auto& next = script_.front();
    if (next.adapter != request.adapter) {
        throw Error(Errc::adapter_mismatch, "adapter mismatch: expected " + next.adapter.serialize() +
                                                ", got " + request.adapter.serialize());
    }
    BackendReply reply{next.reply, Finish::stop};
    script_.pop_front();
    return reply;
}

std::vector<CompletionRequest> ScriptedBackend::recorded() const {
    std::lock_guard lock(mutex_);
    return recorded_;
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return script_.size();
}

std::string_view to_string(StructuredOutput mode) noexcept {
    switch (mode) {
    case StructuredOutput::none: return "none";
    case StructuredOutput::vllm_guided: return "vllm-guided";
    case StructuredOutput::response_format: return "response-format";
    }
    return "none";
}

StructuredOutput structured_output_from_string(std::string_view text) {
    if (text == "none") return StructuredOutput::none;
    if (text == "vllm-guided") return StructuredOutput::vllm_guided;
    if (text == "response-format") return StructuredOutput::response_format;
    throw Error(Errc::invalid_config, "unknown structured output mode: " + std::string(text));
}

OpenAiBackend::OpenAiBackend(OpenAiConfig config) : config_(std::move(config)) {
    const std::string& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(Errc::invalid_config, "backend URL needs a scheme: " + url);
    }
    if (url.compare(0, scheme_end, "http") != 0) {
        // Built without TLS; put a local proxy in front of https endpoints.
        throw Error(Errc::invalid_config, "only http:// backends are supported: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
    if (config_.timeout.count() <= 0) {
        throw Error(Errc::invalid_config, "backend timeout must be positive");
    }
}

bool OpenAiBackend::native_constraints() const {
    return config_.structured_output != StructuredOutput::none;
}

json OpenAiBackend::build_body(const CompletionRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back(to_json(m));
    }
    json body{{"model", config_.model_override.value_or(request.adapter.serialize())},
              {"messages", std::move(messages)},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature}};
    if (!request.constraint || config_.structured_output == StructuredOutput::none) {
        return body;
    }
    const auto& c = *request.constraint;
    if (config_.structured_output == StructuredOutput::vllm_guided) {
        if (c.kind == ConstraintKind::enumeration) body["guided_choice"] = c.options;
        if (c.kind == ConstraintKind::json_schema) body["guided_json"] = c.schema;
    } else {
        if (c.kind == ConstraintKind::json_schema) {
            body["response_format"] = {{"type", "json_schema"},
                                       {"json_schema", {{"name", "arguments"}, {"schema", c.schema}}}};
        } else if (c.kind == ConstraintKind::enumeration) {
            body["response_format"] = {
                {"type", "json_schema"},
                {"json_schema", {{"name", "choice"}, {"schema", {{"type", "string"}, {"enum", c.options}}}}}};
        }
    }
    return body;
}

BackendReply OpenAiBackend::generate(const CompletionRequest& request) {
    httplib::Client client(scheme_host_port_);
    const auto secs = config_.timeout.count() / 1000;
    const auto usecs = (config_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    const auto body = build_body(request);
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read) {
            throw Error(Errc::timeout, "backend did not answer within " +
                                           std::to_string(config_.timeout.count()) + " ms");
        }
        throw Error(Errc::backend_unreachable,
                    "cannot reach " + scheme_host_port_ + ": " + httplib::to_string(err));
    }
    const std::string model = body["model"].get<std::string>();
    if (res->status == 404 || (res->status >= 400 && res->body.find("does not exist") != std::string::npos)) {
        throw Error(Errc::unknown_adapter, "backend does not serve model '" + model + "'");
    }
    if (res->status != 200) {
        throw Error(Errc::backend_unreachable,
                    "backend returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
        auto reply = json::parse(res->body);
        const auto& choice = reply.at("choices").at(0);
        BackendReply out;
        const auto& content = choice.at("message").at("content");
        out.content = content.is_string() ? content.get<std::string>() : std::string{};
        if (choice.contains("finish_reason") && choice["finish_reason"] == "length") {
            out.finish = Finish::length;
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::backend_unreachable, std::string("malformed completion response: ") + e.what());
    }
}

} // namespace splitcall
