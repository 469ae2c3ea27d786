#include "splitcall/config.hpp"

#include <cstdlib>
#include <set>

#include "toml.hpp"

#include "splitcall/error.hpp"

namespace splitcall {

namespace fs = std::filesystem;

void AppConfig::validate() const {
    if (toolsets.empty()) {
        throw Error(Errc::invalid_config, "at least one toolset must be configured");
    }
    std::set<std::string> ids;
    for (const auto& t : toolsets) {
        if (t.toolset_id.empty()) throw Error(Errc::invalid_config, "toolset without id");
        if (!ids.insert(t.toolset_id).second) {
            throw Error(Errc::invalid_config, "duplicate toolset id: " + t.toolset_id);
        }
    }
    if (adapter_cache_capacity < 1) {
        throw Error(Errc::invalid_config, "adapters.cache_capacity must be at least 1");
    }
    if (backend.url.empty()) {
        throw Error(Errc::invalid_config, "backend is not configured");
    }
    session.validate();
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

namespace {

fs::path resolve_against(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string resolve_backend_url(const fs::path& base, const std::string& url) {
    if (url.rfind("mock:", 0) == 0) {
        return "mock:" + resolve_against(base, url.substr(5)).string();
    }
    return url;
}

template <typename T>
T required(const toml::node_view<const toml::node>& node, const std::string& what) {
    auto v = node.value<T>();
    if (!v) throw Error(Errc::invalid_config, what + " is missing or has the wrong type");
    return *v;
}

std::size_t to_count(std::int64_t v, const std::string& what) {
    if (v < 0) throw Error(Errc::invalid_config, what + " must not be negative");
    return static_cast<std::size_t>(v);
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        auto v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return to_count(v, what);
    } catch (const std::logic_error&) {
        throw Error(Errc::invalid_config, what + ": not an integer: '" + text + "'");
    }
}

bool parse_bool(const std::string& text, const std::string& what) {
    auto t = to_lower(text);
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    throw Error(Errc::invalid_config, what + ": not a boolean: '" + text + "'");
}

ToolsetConfig parse_toolset(const toml::table& t, const fs::path& base, std::size_t index) {
    const std::string where = "toolsets[" + std::to_string(index) + "]";
    const toml::node_view<const toml::node> view{&t};
    ToolsetConfig c;
    c.toolset_id = required<std::string>(view["id"], where + ".id");
    c.transport = transport_from_string(view["transport"].value_or(std::string("builtin")));
    c.command = view["command"].value_or(std::string{});
    c.description = view["description"].value_or(std::string{});
    if (auto roots = t["allowed_roots"].as_array()) {
        for (const auto& r : *roots) {
            auto s = r.value<std::string>();
            if (!s) throw Error(Errc::invalid_config, where + ".allowed_roots must be strings");
            c.sandbox.allowed_roots.push_back(resolve_against(base, *s));
        }
    }
    if (auto v = view["timeout_ms"].value<std::int64_t>()) {
        c.sandbox.timeout = std::chrono::milliseconds(*v);
    }
    if (auto v = view["max_output_bytes"].value<std::int64_t>()) {
        c.sandbox.max_output_bytes = to_count(*v, where + ".max_output_bytes");
    }
    return c;
}

} // namespace

AppConfig parse_config(std::string_view toml_text, const fs::path& base_dir, const EnvLookup& env) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error(Errc::parse_error, std::string("config: ") + std::string(e.description()) + " at line " +
                                           std::to_string(e.source().begin.line));
    }
    const toml::node_view<const toml::node> view{&root};
    AppConfig config;

    // backend = "..." or [backend] url = "..."
    if (auto url = view["backend"].value<std::string>()) {
        config.backend.url = *url;
    } else if (view["backend"].is_table()) {
        auto b = view["backend"];
        config.backend.url = b["url"].value_or(std::string{});
        config.backend.api_key = b["api_key"].value_or(std::string{});
        if (auto m = b["model"].value<std::string>(); m && !m->empty()) config.backend.model = *m;
        config.backend.structured_output =
            structured_output_from_string(b["structured_output"].value_or(std::string("vllm-guided")));
        if (auto t = b["timeout_ms"].value<std::int64_t>()) config.backend.timeout = std::chrono::milliseconds(*t);
    }

    if (auto m = view["adapter_manifest"].value<std::string>()) config.adapter_manifest = *m;
    if (view["adapters"].is_table()) {
        auto a = view["adapters"];
        if (auto m = a["manifest"].value<std::string>()) config.adapter_manifest = *m;
        config.plan = adapter_plan_from_string(a["plan"].value_or(std::string("decoupled")));
        if (auto c = a["cache_capacity"].value<std::int64_t>()) {
            config.adapter_cache_capacity = to_count(*c, "adapters.cache_capacity");
        }
    }

    if (view["session"].is_table()) {
        auto s = view["session"];
        if (auto v = s["max_steps"].value<std::int64_t>()) config.session.max_steps = to_count(*v, "session.max_steps");
        if (auto v = s["hierarchical"].value<bool>()) config.session.hierarchical = *v;
        if (auto v = s["retry_on_invalid_args"].value<std::int64_t>()) {
            config.session.retry_on_invalid_args = to_count(*v, "session.retry_on_invalid_args");
        }
        config.session.system_prompt = s["system_prompt"].value_or(std::string{});
    }

    if (auto arr = root["toolsets"].as_array()) {
        std::size_t i = 0;
        for (const auto& node : *arr) {
            const auto* t = node.as_table();
            if (!t) throw Error(Errc::invalid_config, "toolsets entries must be tables");
            config.toolsets.push_back(parse_toolset(*t, base_dir, i++));
        }
    }

    // Environment overrides.
    auto get = [&](const char* name) { return env ? env(name) : std::nullopt; };
    if (auto v = get("ORCH_BACKEND")) config.backend.url = *v;
    if (auto v = get("ORCH_BACKEND_API_KEY")) config.backend.api_key = *v;
    if (auto v = get("ORCH_BACKEND_MODEL")) config.backend.model = *v;
    if (auto v = get("ORCH_BACKEND_STRUCTURED_OUTPUT")) config.backend.structured_output = structured_output_from_string(*v);
    if (auto v = get("ORCH_BACKEND_TIMEOUT_MS")) {
        config.backend.timeout = std::chrono::milliseconds(parse_count(*v, "ORCH_BACKEND_TIMEOUT_MS"));
    }
    if (auto v = get("ORCH_ADAPTER_MANIFEST")) config.adapter_manifest = *v;
    if (auto v = get("ORCH_ADAPTER_PLAN")) config.plan = adapter_plan_from_string(*v);
    if (auto v = get("ORCH_ADAPTER_CACHE_CAPACITY")) {
        config.adapter_cache_capacity = parse_count(*v, "ORCH_ADAPTER_CACHE_CAPACITY");
    }
    if (auto v = get("ORCH_SESSION_MAX_STEPS")) config.session.max_steps = parse_count(*v, "ORCH_SESSION_MAX_STEPS");
    if (auto v = get("ORCH_SESSION_HIERARCHICAL")) config.session.hierarchical = parse_bool(*v, "ORCH_SESSION_HIERARCHICAL");
    if (auto v = get("ORCH_SESSION_RETRY_ON_INVALID_ARGS")) {
        config.session.retry_on_invalid_args = parse_count(*v, "ORCH_SESSION_RETRY_ON_INVALID_ARGS");
    }
    if (auto v = get("ORCH_SESSION_SYSTEM_PROMPT")) config.session.system_prompt = *v;

    config.backend.url = resolve_backend_url(base_dir, config.backend.url);
    if (!config.adapter_manifest.empty()) {
        config.adapter_manifest = resolve_against(base_dir, config.adapter_manifest.string());
    }
    config.validate();
    return config;
}

AppConfig load_config(const fs::path& path, const EnvLookup& env) {
    auto text = read_text_file(path);
    auto base = fs::absolute(path).parent_path();
    try {
        return parse_config(text, base, env);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.is_mock()) {
        return std::make_shared<ScriptedBackend>(load_script(spec.url.substr(5)));
    }
    OpenAiConfig c;
    c.base_url = spec.url;
    c.api_key = spec.api_key;
    c.model_override = spec.model;
    c.structured_output = spec.structured_output;
    c.timeout = spec.timeout;
    return std::make_shared<OpenAiBackend>(std::move(c));
}

void register_toolsets(ToolHub& hub, const AppConfig& config) {
    for (const auto& t : config.toolsets) {
        hub.register_toolset(t);
    }
}

} // namespace splitcall
