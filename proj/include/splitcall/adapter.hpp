#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "splitcall/json_util.hpp"

namespace splitcall {

struct Catalog;

enum class AdapterKind { base, selector, argument };

// Identity of a model adapter. Serialized as "base", "sel:<toolset>" or
// "arg:<toolset>:<tool>"; the serialized form is what the serving backend
// sees as the model name.
class AdapterId {
public:
    AdapterId() = default;

    static AdapterId base();
    static AdapterId selector(std::string toolset);
    static AdapterId argument(std::string toolset, std::string tool);
    // Throws invalid-argument on malformed input.
    static AdapterId parse(std::string_view text);

    AdapterKind kind() const noexcept { return kind_; }
    const std::string& toolset() const noexcept { return toolset_; }
    const std::string& tool() const noexcept { return tool_; }

    std::string serialize() const;

    auto operator<=>(const AdapterId&) const = default;

private:
    AdapterId(AdapterKind kind, std::string toolset, std::string tool);

    AdapterKind kind_ = AdapterKind::base;
    std::string toolset_;
    std::string tool_;
};

// Toolset and tool names that can appear inside an AdapterId: non-empty,
// [A-Za-z0-9_.-] only.
bool is_identifier(std::string_view text) noexcept;

struct RouteStage {};
struct SelectStage {
    std::string toolset;
};
struct ArgumentStage {
    std::string toolset;
    std::string tool;
};
using Stage = std::variant<RouteStage, SelectStage, ArgumentStage>;

// Which adapters serve the selection and argument stages.
//   decoupled: sel:<toolset> for selection, arg:<toolset>:<tool> for arguments
//   single:    one fine-tuned adapter per toolset (sel:<toolset>) for both
//   base_only: the base model everywhere
enum class AdapterPlan { decoupled, single, base_only };

std::string_view to_string(AdapterPlan plan) noexcept;
AdapterPlan adapter_plan_from_string(std::string_view text);

class AdapterRegistry {
public:
    AdapterRegistry(const Catalog& catalog, AdapterPlan plan = AdapterPlan::decoupled);

    // Throws unknown-toolset / unknown-tool for unregistered names.
    AdapterId resolve(const Stage& stage) const;

    AdapterPlan plan() const noexcept { return plan_; }

private:
    std::map<std::string, std::set<std::string>> tools_;
    AdapterPlan plan_;
};

// Logical adapter residency. `loaded` runs from least to most recently used.
struct AdapterCacheState {
    std::size_t capacity = 8;
    std::vector<AdapterId> loaded;
    std::size_t load_events = 0;
    std::size_t evict_events = 0;

    bool operator==(const AdapterCacheState&) const = default;
};

struct EnsureLoadedResult {
    AdapterCacheState state;
    std::optional<AdapterId> evicted;
};

// Makes `id` resident and most recent. When the cache is full the least
// recently used adapter other than base is evicted. Throws invalid-argument
// when capacity is zero, or when the only resident adapter is the pinned
// base and there is no slot left for `id`.
EnsureLoadedResult ensure_loaded(const AdapterId& id, AdapterCacheState state);

struct ManifestEntry {
    AdapterId adapter_id;
    std::string artifact_path;

    bool operator==(const ManifestEntry&) const = default;
};

// Adapter manifest file: JSON array of {adapter_id, artifact_path}.
std::vector<ManifestEntry> manifest_from_json(const json& j);
json to_json(const std::vector<ManifestEntry>& manifest);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& manifest);

// Builds a manifest from adapter directories named by serialized AdapterId
// (e.g. "sel:filesystem/", "arg:filesystem:read_file/").
std::vector<ManifestEntry> scan_adapter_directory(const std::filesystem::path& dir);

} // namespace splitcall
