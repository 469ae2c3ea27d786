#include "splitcall/orchestrator.hpp"

#include "splitcall/error.hpp"
#include "splitcall/prompts.hpp"

namespace splitcall {

void SessionConfig::validate() const {
    if (max_steps < 1) {
        throw Error(Errc::invalid_config, "max_steps must be at least 1");
    }
}

Orchestrator::Orchestrator(ToolHub& hub, Gateway& gateway, AdapterPlan plan)
    : hub_(hub), gateway_(gateway), catalog_(hub.catalog()), registry_(catalog_, plan) {}

std::string Orchestrator::system_prompt(const SessionConfig& config) const {
    return config.system_prompt.empty() ? prompts::kDefaultSystemPrompt : config.system_prompt;
}

namespace {

std::string constrained_choice(Gateway& gateway, std::vector<Message> messages, AdapterId adapter,
                               std::vector<std::string> options, const char* what) {
    CompletionRequest request;
    request.messages = std::move(messages);
    request.adapter = std::move(adapter);
    request.constraint = Constraint::one_of(std::move(options));
    request.max_tokens = 32;
    auto completion = gateway.complete(request);
    if (completion.finish == Finish::constraint_violation) {
        throw Error(Errc::constraint_violation,
                    std::string(what) + " reply is not an allowed option: '" + trim(completion.raw) + "'");
    }
    return completion.content;
}

} // namespace

std::string Orchestrator::route_toolset(std::span<const Message> history, const SessionConfig& config) const {
    auto ids = catalog_.toolset_ids();
    if (ids.empty()) {
        throw Error(Errc::unknown_toolset, "no toolsets registered");
    }
    if (ids.size() == 1) {
        return ids.front();
    }
    return constrained_choice(gateway_, prompts::routing_prompt(system_prompt(config), catalog_, history),
                              registry_.resolve(RouteStage{}), std::move(ids), "routing");
}

std::optional<std::string> Orchestrator::select_tool(std::span<const Message> history,
                                                     const std::string& toolset_id,
                                                     const SessionConfig& config) const {
    auto adapter = registry_.resolve(SelectStage{toolset_id});
    std::vector<std::string> options;
    for (const auto& spec : catalog_.toolsets.at(toolset_id).tools) {
        options.push_back(spec.name);
    }
    options.emplace_back(prompts::kSummarize);
    auto choice = constrained_choice(
        gateway_, prompts::selection_prompt(system_prompt(config), catalog_, toolset_id, history),
        std::move(adapter), std::move(options), "tool selection");
    if (choice == prompts::kSummarize) {
        return std::nullopt;
    }
    return choice;
}

std::optional<std::pair<std::string, std::string>> Orchestrator::select_tool_flat(
    std::span<const Message> history, const SessionConfig& config) const {
    auto names = prompts::flat_tool_names(catalog_);
    std::vector<std::string> options;
    for (const auto& n : names) {
        options.push_back(n.display);
    }
    options.emplace_back(prompts::kSummarize);
    auto choice = constrained_choice(gateway_,
                                     prompts::flat_selection_prompt(system_prompt(config), catalog_, history),
                                     AdapterId::base(), std::move(options), "tool selection");
    if (choice == prompts::kSummarize) {
        return std::nullopt;
    }
    for (const auto& n : names) {
        if (n.display == choice) {
            return std::make_pair(n.toolset_id, n.tool);
        }
    }
    throw Error(Errc::constraint_violation, "unmapped flat tool name: " + choice);
}

ArgumentOutcome Orchestrator::attempt_arguments(std::span<const Message> history, const std::string& toolset_id,
                                                const std::string& tool, const SessionConfig& config) const {
    const auto& spec = catalog_.spec(toolset_id, tool);
    CompletionRequest request;
    request.messages = prompts::argument_prompt(system_prompt(config), spec, history);
    request.adapter = registry_.resolve(ArgumentStage{toolset_id, tool});
    request.constraint = Constraint::matching(spec.schema);

    ArgumentOutcome out;
    for (std::size_t attempt = 0; attempt <= config.retry_on_invalid_args; ++attempt) {
        auto completion = gateway_.complete(request);
        ++out.attempts;
        if (completion.finish != Finish::constraint_violation) {
            out.arguments = json::parse(completion.content);
            out.valid = true;
            out.violations.clear();
            return out;
        }
        out.violations = completion.violations;
        try {
            out.arguments = json::parse(strip_code_fences(completion.raw));
        } catch (const json::parse_error&) {
            // keep the previous parse, if any
        }
        auto retry = prompts::argument_retry_messages(completion.raw, out.violations);
        request.messages.insert(request.messages.end(), retry.begin(), retry.end());
    }
    return out;
}

json Orchestrator::generate_arguments(std::span<const Message> history, const std::string& toolset_id,
                                      const std::string& tool, const SessionConfig& config) const {
    auto outcome = attempt_arguments(history, toolset_id, tool, config);
    if (!outcome.valid) {
        std::string joined;
        for (const auto& v : outcome.violations) {
            joined += (joined.empty() ? "" : "; ") + v;
        }
        throw Error(Errc::invalid_arguments, tool + ": " + joined);
    }
    return outcome.arguments;
}

Trajectory Orchestrator::run(const std::string& query, const SessionConfig& config) const {
    config.validate();
    Trajectory t;
    t.query = query;
    auto history = prompts::history(query, {});

    while (true) {
        if (t.steps.size() >= config.max_steps) {
            t.terminated_by = Termination::max_steps;
            break;
        }
        try {
            Step step;
            step.index = t.steps.size();
            std::optional<std::pair<std::string, std::string>> choice;
            std::string toolset;
            if (config.hierarchical) {
                toolset = route_toolset(history, config);
                step.model_calls += catalog_.toolsets.size() > 1 ? 1 : 0;
                auto tool = select_tool(history, toolset, config);
                if (tool) choice = std::make_pair(toolset, *tool);
            } else {
                choice = select_tool_flat(history, config);
            }
            ++step.model_calls;

            if (!choice) {
                t.final_toolset = toolset;
                CompletionRequest request;
                request.messages = prompts::summary_prompt(system_prompt(config), history);
                request.adapter = AdapterId::base();
                auto completion = gateway_.complete(request);
                t.summary = trim(completion.content);
                if (t.summary.empty()) {
                    t.terminated_by = Termination::error;
                    t.error = "empty summary";
                } else {
                    t.terminated_by = Termination::summarize;
                }
                break;
            }

            step.toolset_id = choice->first;
            step.tool = choice->second;
            auto outcome = attempt_arguments(history, step.toolset_id, step.tool, config);
            ++step.model_calls;
            step.argument_attempts = outcome.attempts;
            step.arguments = outcome.arguments;
            if (!outcome.valid) {
                std::string text = "invalid arguments:";
                for (const auto& v : outcome.violations) text += " " + v + ";";
                step.result = ToolResult{ToolStatus::error, text, false, {}};
            } else {
                try {
                    step.result = hub_.invoke(step.toolset_id, step.tool, step.arguments);
                } catch (const Error& e) {
                    // Rejected calls are shown to the model like any other failure.
                    step.result = ToolResult{ToolStatus::error, std::string(to_string(e.code())) + ": " + e.what(),
                                             false, {}};
                }
            }
            history.push_back({Role::assistant, prompts::tool_call_turn(step.tool, step.arguments)});
            history.push_back(prompts::tool_result_message(step.result));
            t.steps.push_back(std::move(step));
        } catch (const Error& e) {
            t.terminated_by = Termination::error;
            t.error = std::string(to_string(e.code())) + ": " + e.what();
            break;
        }
    }
    return t;
}

} // namespace splitcall
