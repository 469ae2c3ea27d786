#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/toolhub.hpp"

namespace splitcall {

struct Step {
    std::size_t index = 0;
    std::string toolset_id;
    std::string tool;
    json arguments;  // null when no attempt produced parseable JSON
    ToolResult result;
    // Routing + selection + argument stages: 3, or 2 without routing.
    std::size_t model_calls = 0;
    // Argument completions issued, including retries.
    std::size_t argument_attempts = 0;

    bool operator==(const Step&) const = default;
};

json to_json(const Step& step);
Step step_from_json(const json& j);

enum class Termination { summarize, max_steps, error };

std::string_view to_string(Termination t) noexcept;
Termination termination_from_string(std::string_view text);

struct Trajectory {
    std::string id;
    std::string query;
    std::vector<Step> steps;
    std::string summary;
    Termination terminated_by = Termination::summarize;
    std::string error;          // set when terminated_by == error
    std::string final_toolset;  // toolset routed on the iteration that chose summarize
    // Provenance for generator trajectories; empty otherwise.
    std::string query_id;
    std::string query_toolset;
    std::string query_tool;

    bool operator==(const Trajectory&) const = default;
};

// Trace format: one {"record":"step",...} line per step, then one
// {"record":"summary",...} line with the session-level fields.
std::string to_trace_jsonl(const Trajectory& trajectory);
Trajectory trajectory_from_trace(const std::vector<json>& records);

void write_trace(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trace(const std::filesystem::path& path);

// Every *.jsonl trace under `dir`, in path order.
std::vector<Trajectory> read_trace_directory(const std::filesystem::path& dir);

} // namespace splitcall
