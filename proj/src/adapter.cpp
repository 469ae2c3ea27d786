#include "splitcall/adapter.hpp"

#include <algorithm>

#include "splitcall/error.hpp"
#include "splitcall/toolhub.hpp"

namespace splitcall {

namespace fs = std::filesystem;

bool is_identifier(std::string_view text) noexcept {
    if (text.empty()) {
        return false;
    }
    return std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-' || c == '.';
    });
}

AdapterId::AdapterId(AdapterKind kind, std::string toolset, std::string tool)
    : kind_(kind), toolset_(std::move(toolset)), tool_(std::move(tool)) {}

AdapterId AdapterId::base() { return AdapterId(AdapterKind::base, {}, {}); }

AdapterId AdapterId::selector(std::string toolset) {
    if (!is_identifier(toolset)) {
        throw Error(Errc::invalid_argument, "invalid toolset identifier: '" + toolset + "'");
    }
    return AdapterId(AdapterKind::selector, std::move(toolset), {});
}

AdapterId AdapterId::argument(std::string toolset, std::string tool) {
    if (!is_identifier(toolset) || !is_identifier(tool)) {
        throw Error(Errc::invalid_argument,
                    "invalid argument adapter identifiers: '" + toolset + "', '" + tool + "'");
    }
    return AdapterId(AdapterKind::argument, std::move(toolset), std::move(tool));
}

AdapterId AdapterId::parse(std::string_view text) {
    if (text == "base") {
        return base();
    }
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto colon = text.find(':', start);
        parts.emplace_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    if (parts.size() == 2 && parts[0] == "sel") {
        return selector(parts[1]);
    }
    if (parts.size() == 3 && parts[0] == "arg") {
        return argument(parts[1], parts[2]);
    }
    throw Error(Errc::invalid_argument, "malformed adapter id: '" + std::string(text) + "'");
}

std::string AdapterId::serialize() const {
    switch (kind_) {
    case AdapterKind::base: return "base";
    case AdapterKind::selector: return "sel:" + toolset_;
    case AdapterKind::argument: return "arg:" + toolset_ + ":" + tool_;
    }
    return "base";
}

std::string_view to_string(AdapterPlan plan) noexcept {
    switch (plan) {
    case AdapterPlan::decoupled: return "decoupled";
    case AdapterPlan::single: return "single";
    case AdapterPlan::base_only: return "base";
    }
    return "decoupled";
}

AdapterPlan adapter_plan_from_string(std::string_view text) {
    if (text == "decoupled") return AdapterPlan::decoupled;
    if (text == "single") return AdapterPlan::single;
    if (text == "base" || text == "base_only") return AdapterPlan::base_only;
    throw Error(Errc::invalid_config, "unknown adapter plan: " + std::string(text));
}

AdapterRegistry::AdapterRegistry(const Catalog& catalog, AdapterPlan plan) : plan_(plan) {
    for (const auto& [id, info] : catalog.toolsets) {
        auto& names = tools_[id];
        for (const auto& spec : info.tools) {
            names.insert(spec.name);
        }
    }
}

AdapterId AdapterRegistry::resolve(const Stage& stage) const {
    auto require_toolset = [&](const std::string& toolset) {
        if (!tools_.count(toolset)) {
            throw Error(Errc::unknown_toolset, "unknown toolset: " + toolset);
        }
    };
    if (std::holds_alternative<RouteStage>(stage)) {
        return AdapterId::base();
    }
    if (const auto* select = std::get_if<SelectStage>(&stage)) {
        require_toolset(select->toolset);
        return plan_ == AdapterPlan::base_only ? AdapterId::base() : AdapterId::selector(select->toolset);
    }
    const auto& args = std::get<ArgumentStage>(stage);
    require_toolset(args.toolset);
    if (!tools_.at(args.toolset).count(args.tool)) {
        throw Error(Errc::unknown_tool, "unknown tool: " + args.toolset + "/" + args.tool);
    }
    switch (plan_) {
    case AdapterPlan::decoupled: return AdapterId::argument(args.toolset, args.tool);
    case AdapterPlan::single: return AdapterId::selector(args.toolset);
    case AdapterPlan::base_only: return AdapterId::base();
    }
    return AdapterId::base();
}

EnsureLoadedResult ensure_loaded(const AdapterId& id, AdapterCacheState state) {
    if (state.capacity == 0) {
        throw Error(Errc::invalid_argument, "adapter cache capacity must be at least 1");
    }
    EnsureLoadedResult out;
    auto it = std::find(state.loaded.begin(), state.loaded.end(), id);
    if (it != state.loaded.end()) {
        state.loaded.erase(it);
        state.loaded.push_back(id);
        out.state = std::move(state);
        return out;
    }
    if (state.loaded.size() >= state.capacity) {
        auto victim = std::find_if(state.loaded.begin(), state.loaded.end(),
                                   [](const AdapterId& a) { return a.kind() != AdapterKind::base; });
        if (victim == state.loaded.end()) {
            throw Error(Errc::invalid_argument,
                        "adapter cache capacity " + std::to_string(state.capacity) +
                            " leaves no slot beside the pinned base model");
        }
        out.evicted = *victim;
        state.loaded.erase(victim);
        ++state.evict_events;
    }
    state.loaded.push_back(id);
    ++state.load_events;
    out.state = std::move(state);
    return out;
}

std::vector<ManifestEntry> manifest_from_json(const json& j) {
    if (!j.is_array()) {
        throw Error(Errc::invalid_config, "adapter manifest must be a JSON array");
    }
    std::vector<ManifestEntry> entries;
    std::set<AdapterId> seen;
    for (const auto& row : j) {
        ManifestEntry entry{AdapterId::parse(row.at("adapter_id").get<std::string>()),
                            row.at("artifact_path").get<std::string>()};
        if (!seen.insert(entry.adapter_id).second) {
            throw Error(Errc::invalid_config,
                        "duplicate adapter in manifest: " + entry.adapter_id.serialize());
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

json to_json(const std::vector<ManifestEntry>& manifest) {
    json out = json::array();
    for (const auto& e : manifest) {
        out.push_back({{"adapter_id", e.adapter_id.serialize()}, {"artifact_path", e.artifact_path}});
    }
    return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    try {
        return manifest_from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_config, path.string() + ": " + e.what());
    }
}

void save_manifest(const fs::path& path, const std::vector<ManifestEntry>& manifest) {
    write_file_atomic(path, to_json(manifest).dump(2) + "\n");
}

std::vector<ManifestEntry> scan_adapter_directory(const fs::path& dir) {
    std::vector<ManifestEntry> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_directory()) continue;
        auto name = e.path().filename().string();
        try {
            entries.push_back({AdapterId::parse(name), fs::absolute(e.path()).string()});
        } catch (const Error&) {
            // not an adapter directory
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.adapter_id < b.adapter_id; });
    return entries;
}

} // namespace splitcall
