#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/gateway.hpp"
#include "splitcall/toolhub.hpp"
#include "splitcall/trajectory.hpp"

namespace splitcall {

enum class RequirementKind { listing, metadata, content, range };

std::string_view to_string(RequirementKind kind) noexcept;
RequirementKind requirement_kind_from_string(std::string_view text);

struct LineRange {
    enum class From { head, tail } from = From::head;
    std::size_t lines = 0;

    bool operator==(const LineRange&) const = default;
};

struct AtomicRequirement {
    std::string id;
    RequirementKind kind = RequirementKind::listing;
    std::string item;   // path relative to the sandbox root
    std::string field;  // metadata only: size, modified or permissions
    LineRange range;    // range only
    std::set<std::string> satisfied_by;

    bool operator==(const AtomicRequirement&) const = default;
};

struct FsEntry {
    std::string path;  // relative, '/'-separated
    bool is_directory = false;
    std::uint64_t size = 0;
    std::string modified;  // ISO-8601 UTC, as get_file_info prints it
    std::string permissions = "644";
    std::optional<std::string> content;  // files only

    bool operator==(const FsEntry&) const = default;
};

struct GroundTruth {
    std::vector<FsEntry> fs_status;
    std::vector<AtomicRequirement> requirements;

    const FsEntry* find(std::string_view path) const;

    // Throws invalid-config: empty satisfied_by, items missing from
    // fs_status, unknown metadata fields, content requirements without
    // content, duplicate requirement ids.
    void validate() const;

    bool operator==(const GroundTruth&) const = default;
};

json to_json(const FsEntry& entry);
FsEntry fs_entry_from_json(const json& j);
json to_json(const AtomicRequirement& req);
AtomicRequirement atomic_requirement_from_json(const json& j);
json to_json(const GroundTruth& truth);
// Validates before returning.
GroundTruth ground_truth_from_json(const json& j);
GroundTruth load_ground_truth(const std::filesystem::path& path);

// Walks `root` and records every entry; file contents are captured when
// they are at most `max_content_bytes`.
std::vector<FsEntry> snapshot_fs(const std::filesystem::path& root, std::size_t max_content_bytes = 1 << 20);

// Recreates a snapshot under `root`: directories, file contents, mode bits
// and modification times. Files without recorded content are filled with
// `size` placeholder bytes so size metadata still matches.
void materialize_fs(std::span<const FsEntry> entries, const std::filesystem::path& root);

struct CoverageReport {
    // Unset for LLM-judge reports, which only return a score.
    std::optional<std::size_t> total;
    std::optional<std::size_t> satisfied;
    std::optional<double> coverage_percent;
    int score = 0;
    std::string reasoning;
    std::vector<std::string> unsatisfied;  // requirement ids (oracle only)

    bool operator==(const CoverageReport&) const = default;
};

json to_json(const CoverageReport& report);

// Round-half-up of percent / 10, clamped to [0, 10]. Throws out-of-range
// for NaN or values outside [0, 100].
int score(double coverage_percent);

// Same mapping computed exactly from counts; 0 when total is 0.
int score_from_counts(std::size_t satisfied, std::size_t total);

// Deterministic coverage oracle. Extra steps never lower the result.
CoverageReport check_coverage(const GroundTruth& truth, const Trajectory& trajectory);

// Default judge instructions. Any replacement must ask for the same two-key
// JSON reply that parse_verdict() accepts.
extern const std::string kToolFitPrompt;

// System message = instructions; user message = fs_status (without file
// contents), tool descriptions, query, and every call with its output.
std::vector<Message> judge_messages(const Trajectory& trajectory, const GroundTruth& truth,
                                    std::span<const ToolSpec> tools,
                                    std::string_view instructions = kToolFitPrompt);

// Strict verdict: a JSON object with exactly Reasoning_ToolCoverage (string)
// and Score_ToolCoverage (integer 0-10). One reparse after stripping code
// fences / surrounding prose; then malformed-verdict.
CoverageReport parse_verdict(std::string_view reply);

// Throws judge-unreachable on backend failure, malformed-verdict on a bad reply.
CoverageReport llm_judge(const Trajectory& trajectory, const GroundTruth& truth, std::span<const ToolSpec> tools,
                         Gateway& judge, std::string_view instructions = kToolFitPrompt);

// Mean of score x 10 over reports. Throws empty-input.
double aggregate(std::span<const CoverageReport> reports);

// One decimal place: 16.666 -> "16.7".
std::string format_percent(double value);

} // namespace splitcall
