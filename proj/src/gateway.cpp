#include "splitcall/gateway.hpp"

#include <set>

#include "splitcall/error.hpp"
#include "splitcall/schema.hpp"

namespace splitcall {

std::string_view to_string(Role role) noexcept {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_string(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    if (text == "tool") return Role::tool;
    throw Error(Errc::parse_error, "unknown role: " + std::string(text));
}

json to_json(const Message& message) {
    return json{{"role", to_string(message.role)}, {"content", message.content}};
}

Message message_from_json(const json& j) {
    return Message{role_from_string(j.at("role").get<std::string>()), j.at("content").get<std::string>()};
}

std::string_view to_string(ConstraintKind kind) noexcept {
    switch (kind) {
    case ConstraintKind::enumeration: return "enum";
    case ConstraintKind::json_schema: return "json-schema";
    case ConstraintKind::free: return "free";
    }
    return "free";
}

Constraint Constraint::one_of(std::vector<std::string> options) {
    Constraint c;
    c.kind = ConstraintKind::enumeration;
    c.options = std::move(options);
    return c;
}

Constraint Constraint::matching(json schema) {
    Constraint c;
    c.kind = ConstraintKind::json_schema;
    c.schema = std::move(schema);
    return c;
}

Constraint Constraint::none() { return Constraint{}; }

void Constraint::validate() const {
    if (kind == ConstraintKind::enumeration) {
        if (options.empty()) {
            throw Error(Errc::invalid_argument, "enum constraint needs at least one option");
        }
        std::set<std::string> unique(options.begin(), options.end());
        if (unique.size() != options.size()) {
            throw Error(Errc::invalid_argument, "enum constraint options must be unique");
        }
    }
    if (kind == ConstraintKind::json_schema && !schema.is_object()) {
        throw Error(Errc::invalid_argument, "json-schema constraint needs a schema object");
    }
}

json to_json(const Constraint& constraint) {
    json out{{"kind", to_string(constraint.kind)}};
    if (constraint.kind == ConstraintKind::enumeration) out["options"] = constraint.options;
    if (constraint.kind == ConstraintKind::json_schema) out["schema"] = constraint.schema;
    return out;
}

Constraint constraint_from_json(const json& j) {
    auto kind = j.at("kind").get<std::string>();
    if (kind == "enum") return Constraint::one_of(j.at("options").get<std::vector<std::string>>());
    if (kind == "json-schema") return Constraint::matching(j.at("schema"));
    if (kind == "free") return Constraint::none();
    throw Error(Errc::parse_error, "unknown constraint kind: " + kind);
}

void CompletionRequest::validate() const {
    if (messages.empty()) {
        throw Error(Errc::invalid_argument, "completion request has no messages");
    }
    if (messages.front().role != Role::system && messages.front().role != Role::user) {
        throw Error(Errc::invalid_argument, "first message must be system or user");
    }
    if (temperature < 0.0) {
        throw Error(Errc::invalid_argument, "temperature must be non-negative");
    }
    if (constraint) {
        constraint->validate();
    }
}

json to_json(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back(to_json(m));
    json out{{"adapter", request.adapter.serialize()},
             {"messages", messages},
             {"max_tokens", request.max_tokens},
             {"temperature", request.temperature}};
    out["constraint"] = request.constraint ? to_json(*request.constraint) : json();
    return out;
}

CompletionRequest completion_request_from_json(const json& j) {
    CompletionRequest request;
    request.adapter = AdapterId::parse(j.at("adapter").get<std::string>());
    for (const auto& m : j.at("messages")) request.messages.push_back(message_from_json(m));
    request.max_tokens = j.value("max_tokens", std::size_t{1024});
    request.temperature = j.value("temperature", 0.0);
    if (j.contains("constraint") && !j["constraint"].is_null()) {
        request.constraint = constraint_from_json(j["constraint"]);
    }
    return request;
}

std::string_view to_string(Finish finish) noexcept {
    switch (finish) {
    case Finish::stop: return "stop";
    case Finish::length: return "length";
    case Finish::constraint_violation: return "constraint-violation";
    }
    return "stop";
}

namespace {

// Backends sometimes wrap a choice in quotes or add whitespace.
std::string normalize_choice(std::string_view raw) {
    std::string text = trim(raw);
    if (text.size() >= 2 && ((text.front() == '"' && text.back() == '"') ||
                             (text.front() == '\'' && text.back() == '\''))) {
        text = trim(std::string_view(text).substr(1, text.size() - 2));
    }
    return text;
}

} // namespace

Completion enforce_constraint(const std::optional<Constraint>& constraint, BackendReply reply) {
    Completion out;
    out.raw = reply.content;
    out.finish = reply.finish;
    if (!constraint || constraint->kind == ConstraintKind::free) {
        out.content = std::move(reply.content);
        return out;
    }
    if (constraint->kind == ConstraintKind::enumeration) {
        auto choice = normalize_choice(reply.content);
        for (const auto& option : constraint->options) {
            if (option == choice) {
                out.content = option;
                out.finish = Finish::stop;
                return out;
            }
        }
        out.finish = Finish::constraint_violation;
        out.violations.push_back("reply is not one of the allowed options: '" + choice + "'");
        return out;
    }
    json parsed;
    try {
        parsed = json::parse(strip_code_fences(reply.content));
    } catch (const json::parse_error& e) {
        out.finish = Finish::constraint_violation;
        out.violations.push_back(std::string("reply is not valid JSON: ") + e.what());
        return out;
    }
    out.violations = schema::validate(constraint->schema, parsed);
    if (!out.violations.empty()) {
        out.finish = Finish::constraint_violation;
        return out;
    }
    out.content = canonical_dump(parsed);
    out.finish = Finish::stop;
    return out;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::size_t adapter_capacity)
    : backend_(std::move(backend)) {
    if (!backend_) {
        throw Error(Errc::invalid_argument, "gateway needs a backend");
    }
    cache_.capacity = adapter_capacity;
}

Completion Gateway::complete(const CompletionRequest& request) {
    request.validate();
    {
        std::lock_guard lock(cache_mutex_);
        cache_ = ensure_loaded(request.adapter, cache_).state;
    }
    return enforce_constraint(request.constraint, backend_->generate(request));
}

AdapterCacheState Gateway::adapter_cache() const {
    std::lock_guard lock(cache_mutex_);
    return cache_;
}

PromptPayload count_prompt_payload(std::span<const Message> messages, const Tokenizer& tokenizer) {
    PromptPayload payload;
    for (const auto& m : messages) {
        payload.characters += codepoint_count(m.content);
        if (tokenizer) {
            payload.approx_tokens += tokenizer(m.content);
        }
    }
    if (!tokenizer) {
        payload.approx_tokens = (payload.characters + 3) / 4;
    }
    return payload;
}

} // namespace splitcall
