#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitcall/adapter.hpp"
#include "splitcall/gateway.hpp"
#include "splitcall/toolhub.hpp"
#include "splitcall/trajectory.hpp"

namespace splitcall {

struct SessionConfig {
    std::size_t max_steps = 20;
    bool hierarchical = true;
    std::size_t retry_on_invalid_args = 1;
    std::string system_prompt;  // empty: prompts::kDefaultSystemPrompt

    // Throws invalid-config when max_steps is 0.
    void validate() const;
};

struct ArgumentOutcome {
    json arguments;  // last parsed reply; null if none parsed
    bool valid = false;
    std::vector<std::string> violations;  // from the last attempt
    std::size_t attempts = 0;
};

// Runs the route -> select -> arguments -> execute loop. Holds no per-session
// state, so one instance can serve concurrent sessions.
class Orchestrator {
public:
    // Snapshots the hub's catalog; register toolsets before constructing.
    Orchestrator(ToolHub& hub, Gateway& gateway, AdapterPlan plan = AdapterPlan::decoupled);

    // Returns the only toolset without a model call when one is registered.
    // Throws constraint-violation when the reply is not a toolset id.
    std::string route_toolset(std::span<const Message> history, const SessionConfig& config) const;

    // nullopt means "summarize".
    std::optional<std::string> select_tool(std::span<const Message> history, const std::string& toolset_id,
                                           const SessionConfig& config) const;

    // Flat mode: one enum over every tool. Returns {toolset, tool}, or
    // nullopt for summarize.
    std::optional<std::pair<std::string, std::string>> select_tool_flat(std::span<const Message> history,
                                                                        const SessionConfig& config) const;

    // Throws invalid-arguments once retries are exhausted.
    json generate_arguments(std::span<const Message> history, const std::string& toolset_id,
                            const std::string& tool, const SessionConfig& config) const;

    // Non-throwing variant used by run().
    ArgumentOutcome attempt_arguments(std::span<const Message> history, const std::string& toolset_id,
                                      const std::string& tool, const SessionConfig& config) const;

    Trajectory run(const std::string& query, const SessionConfig& config) const;

    const Catalog& catalog() const noexcept { return catalog_; }
    const AdapterRegistry& registry() const noexcept { return registry_; }

private:
    std::string system_prompt(const SessionConfig& config) const;

    ToolHub& hub_;
    Gateway& gateway_;
    Catalog catalog_;
    AdapterRegistry registry_;
};

} // namespace splitcall
