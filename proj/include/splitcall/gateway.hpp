#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/adapter.hpp"
#include "splitcall/json_util.hpp"

namespace splitcall {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role) noexcept;
Role role_from_string(std::string_view text);

struct Message {
    Role role = Role::user;
    std::string content;

    bool operator==(const Message&) const = default;
};

json to_json(const Message& message);
Message message_from_json(const json& j);

enum class ConstraintKind { enumeration, json_schema, free };

std::string_view to_string(ConstraintKind kind) noexcept;

struct Constraint {
    ConstraintKind kind = ConstraintKind::free;
    std::vector<std::string> options;  // enumeration only
    json schema;                       // json_schema only

    static Constraint one_of(std::vector<std::string> options);
    static Constraint matching(json schema);
    static Constraint none();

    // Throws invalid-argument: enum options must be non-empty and unique.
    void validate() const;

    bool operator==(const Constraint&) const = default;
};

json to_json(const Constraint& constraint);
Constraint constraint_from_json(const json& j);

struct CompletionRequest {
    std::vector<Message> messages;
    AdapterId adapter;
    std::optional<Constraint> constraint;
    std::size_t max_tokens = 1024;
    double temperature = 0.0;

    // Throws invalid-argument on an empty message list, a first message that
    // is not system/user, a negative temperature, or a malformed constraint.
    void validate() const;

    bool operator==(const CompletionRequest&) const = default;
};

json to_json(const CompletionRequest& request);
CompletionRequest completion_request_from_json(const json& j);

enum class Finish { stop, length, constraint_violation };

std::string_view to_string(Finish finish) noexcept;

struct Completion {
    // Empty when finish == constraint_violation; the backend text is in `raw`.
    std::string content;
    Finish finish = Finish::stop;
    std::string raw;
    std::vector<std::string> violations;
};

struct BackendReply {
    std::string content;
    Finish finish = Finish::stop;
};

// A serving backend that honours per-request adapter selection.
class Backend {
public:
    virtual ~Backend() = default;

    // Throws backend-unreachable, unknown-adapter or timeout.
    virtual BackendReply generate(const CompletionRequest& request) = 0;

    // True when the backend enforces constraints while decoding.
    virtual bool native_constraints() const { return false; }
};

// Uniform completion entry point. Enforces constraints on whatever the
// backend returns and tracks logical adapter residency.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, std::size_t adapter_capacity = 8);

    Completion complete(const CompletionRequest& request);

    AdapterCacheState adapter_cache() const;
    Backend& backend() noexcept { return *backend_; }

private:
    std::shared_ptr<Backend> backend_;
    mutable std::mutex cache_mutex_;
    AdapterCacheState cache_;
};

// Applies a constraint to raw backend text. Exposed for tests.
Completion enforce_constraint(const std::optional<Constraint>& constraint, BackendReply reply);

struct PromptPayload {
    std::size_t characters = 0;
    std::size_t approx_tokens = 0;

    bool operator==(const PromptPayload&) const = default;
};

using Tokenizer = std::function<std::size_t(std::string_view)>;

// Characters are Unicode code points over all message contents. Tokens come
// from `tokenizer` when given, otherwise ceil(characters / 4).
PromptPayload count_prompt_payload(std::span<const Message> messages, const Tokenizer& tokenizer = {});

} // namespace splitcall
