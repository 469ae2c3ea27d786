#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "splitcall/gateway.hpp"
#include "splitcall/toolhub.hpp"
#include "splitcall/trajectory.hpp"

namespace splitcall {

struct SyntheticQuery {
    std::string id;
    std::string toolset_id;
    std::string tool;
    std::string text;

    bool operator==(const SyntheticQuery&) const = default;
};

json to_json(const SyntheticQuery& q);
SyntheticQuery synthetic_query_from_json(const json& j);
void write_queries(const std::filesystem::path& path, std::span<const SyntheticQuery> queries);
std::vector<SyntheticQuery> read_queries(const std::filesystem::path& path);

// Problems with a generated query: absolute paths (leading "/", "~/", drive
// letters) and any tool name from `tool_names` (case-insensitive, whole word).
std::vector<std::string> lint_query(std::string_view text, std::span<const std::string> tool_names);

// Generation prompt for one query that needs `spec`. $TOOL_NAME and
// $GLOBAL_TOOL_LIST in `template_text` are substituted.
extern const std::string kQueryGenerationTemplate;
std::string query_generation_prompt(const ToolSpec& spec, std::span<const std::string> tool_names,
                                    const std::string& template_text = kQueryGenerationTemplate);

struct SynthesisOptions {
    // Extra generations allowed per query after lint rejections.
    std::size_t retries_per_query = 3;
    double temperature = 1.0;
};

// Asks `generator` (base adapter, free text) for n lint-clean queries.
// Throws generator-failure when the backend fails and lint-budget-exhausted
// when a query keeps failing lint.
std::vector<SyntheticQuery> synthesize_queries(const ToolSpec& spec, std::size_t n, Gateway& generator,
                                               std::span<const std::string> tool_names,
                                               const SynthesisOptions& options = {});

enum class InstanceKind { selection, argument };

std::string_view to_string(InstanceKind kind) noexcept;
InstanceKind instance_kind_from_string(std::string_view text);

struct TrainingInstance {
    InstanceKind kind = InstanceKind::selection;
    std::string toolset_id;
    std::optional<std::string> tool;  // argument instances only
    std::string context;
    std::string target;
    // Half-open code-point ranges within target.
    std::vector<std::pair<std::size_t, std::size_t>> mask_spans;
    std::string trajectory_id;
    std::size_t step_index = 0;

    bool operator==(const TrainingInstance&) const = default;
};

json to_json(const TrainingInstance& instance);
TrainingInstance training_instance_from_json(const json& j);
void write_instances(const std::filesystem::path& path, std::span<const TrainingInstance> instances);
std::vector<TrainingInstance> read_instances(const std::filesystem::path& path);

// Concatenation of the masked characters of target.
std::string masked_text(const TrainingInstance& instance);

// Empty when spans are sorted, non-overlapping and inside target.
std::vector<std::string> check_mask_spans(const TrainingInstance& instance);

struct ExtractedInstances {
    std::vector<TrainingInstance> selection;
    std::vector<TrainingInstance> argument;
};

// One selection and one argument instance per step, plus a terminal
// "summarize" selection instance for summarize-terminated trajectories.
// Contexts are the rendered prompts the orchestrator issues for that step.
// Throws malformed-trajectory on zero steps or tools missing from `catalog`.
ExtractedInstances extract_instances(const Trajectory& trajectory, const Catalog& catalog,
                                     std::string_view system_prompt);

// Deterministic Fisher-Yates over mt19937_64; identical on every platform.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed);

struct TrajectorySplit {
    std::vector<std::size_t> train;  // indices into the input
    std::vector<std::size_t> validation;
};

// round(ratio * n) trajectories go to train. Throws too-few-trajectories
// for n < 2 and invalid-argument for ratio outside (0, 1).
TrajectorySplit split_trajectories(std::size_t n, double ratio, std::uint64_t seed);

struct DatasetSplit {
    std::vector<TrainingInstance> train;
    std::vector<TrainingInstance> validation;
    std::uint64_t seed = 0;
    std::vector<std::string> train_trajectories;
    std::vector<std::string> validation_trajectories;
};

DatasetSplit split_dataset(std::span<const Trajectory> trajectories, const Catalog& catalog,
                           std::string_view system_prompt, double ratio, std::uint64_t seed);

// Balanced test reservation: per-group counts differ by at most one; the
// groups receiving the remainder are drawn with the seed. Throws
// insufficient-queries when a group is empty or cannot fill its quota.
std::vector<SyntheticQuery> reserve_test_set(const std::map<std::string, std::vector<SyntheticQuery>>& by_tool,
                                             std::size_t total, std::uint64_t seed);

// Ids of trajectories with more than `max_steps` steps, for manual review.
std::vector<std::string> lint_trajectories(std::span<const Trajectory> trajectories, std::size_t max_steps = 20);

} // namespace splitcall

#include <random>

template <typename T>
void splitcall::seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}
