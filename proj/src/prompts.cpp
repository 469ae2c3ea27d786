#include "splitcall/prompts.hpp"

#include <map>

#include "splitcall/error.hpp"

namespace splitcall::prompts {

const std::string kDefaultSystemPrompt =
    "You are an assistant that completes the user's request by calling tools. "
    "Each step calls exactly one tool; its output is shown to you before the next step. "
    "Use only the tools listed below.";

std::string render_tool(const ToolSpec& spec, std::string_view display_name) {
    std::string out = "### tool: ";
    out += display_name;
    out += "\n";
    out += spec.description;
    out += "\nparameters: ";
    out += canonical_dump(spec.schema);
    out += "\n";
    return out;
}

std::string render_tool(const ToolSpec& spec) { return render_tool(spec, spec.name); }

namespace {

constexpr std::string_view kTurnName = "{\"name\":";
constexpr std::string_view kTurnArgs = ",\"arguments\":";

json arguments_or_empty(const json& arguments) {
    return arguments.is_null() ? json::object() : arguments;
}

std::vector<Message> with_frame(std::string system_text, std::span<const Message> history,
                                std::string instruction) {
    std::vector<Message> out;
    out.reserve(history.size() + 2);
    out.push_back({Role::system, std::move(system_text)});
    out.insert(out.end(), history.begin(), history.end());
    out.push_back({Role::user, std::move(instruction)});
    return out;
}

std::string summarize_note() {
    return "When the request has been fully handled, reply `" + std::string(kSummarize) +
           "` instead of a tool name.";
}

} // namespace

std::string tool_call_turn(std::string_view tool, const json& arguments) {
    std::string out(kTurnName);
    out += json(std::string(tool)).dump();
    out += kTurnArgs;
    out += canonical_dump(arguments_or_empty(arguments));
    out += "}";
    return out;
}

TurnLayout tool_call_layout(std::string_view tool, const json& arguments) {
    const std::string quoted = json(std::string(tool)).dump();
    TurnLayout layout;
    layout.name = {kTurnName.size() + 1, kTurnName.size() + quoted.size() - 1};
    const std::size_t args_start = kTurnName.size() + quoted.size() + kTurnArgs.size();
    layout.arguments = {args_start, args_start + canonical_dump(arguments_or_empty(arguments)).size()};
    return layout;
}

Message tool_result_message(const ToolResult& result) {
    if (result.status == ToolStatus::ok) {
        return {Role::tool, result.payload};
    }
    return {Role::tool, "[" + std::string(to_string(result.status)) + "] " + result.payload};
}

std::vector<Message> history(std::string_view query, std::span<const Step> steps) {
    std::vector<Message> out;
    out.reserve(1 + 2 * steps.size());
    out.push_back({Role::user, std::string(query)});
    for (const auto& step : steps) {
        out.push_back({Role::assistant, tool_call_turn(step.tool, step.arguments)});
        out.push_back(tool_result_message(step.result));
    }
    return out;
}

std::vector<Message> routing_prompt(std::string_view system_prompt, const Catalog& catalog,
                                    std::span<const Message> history) {
    std::string system(system_prompt);
    system += "\n\nAvailable toolsets:\n";
    for (const auto& [id, info] : catalog.toolsets) {
        system += "- " + id + ": " + info.description + "\n";
    }
    std::string options;
    for (const auto& id : catalog.toolset_ids()) {
        options += (options.empty() ? "" : ", ") + id;
    }
    return with_frame(std::move(system), history,
                      "Which toolset should handle the next step? Reply with exactly one of: " + options + ".");
}

std::vector<Message> selection_prompt(std::string_view system_prompt, const Catalog& catalog,
                                      const std::string& toolset_id, std::span<const Message> history) {
    auto it = catalog.toolsets.find(toolset_id);
    if (it == catalog.toolsets.end()) {
        throw Error(Errc::unknown_toolset, "unknown toolset: " + toolset_id);
    }
    std::string system(system_prompt);
    system += "\n\nTools in toolset " + toolset_id + ":\n";
    for (const auto& spec : it->second.tools) {
        system += render_tool(spec);
    }
    system += summarize_note();
    return with_frame(std::move(system), history, "Select the next tool. Reply with the tool name only.");
}

std::vector<FlatName> flat_tool_names(const Catalog& catalog) {
    std::map<std::string, int> seen;
    for (const auto& [id, info] : catalog.toolsets) {
        for (const auto& spec : info.tools) ++seen[spec.name];
    }
    std::vector<FlatName> out;
    for (const auto& [id, info] : catalog.toolsets) {
        for (const auto& spec : info.tools) {
            out.push_back({seen[spec.name] > 1 ? id + "/" + spec.name : spec.name, id, spec.name});
        }
    }
    return out;
}

std::vector<Message> flat_selection_prompt(std::string_view system_prompt, const Catalog& catalog,
                                           std::span<const Message> history) {
    std::string system(system_prompt);
    system += "\n\nTools:\n";
    for (const auto& name : flat_tool_names(catalog)) {
        system += render_tool(catalog.spec(name.toolset_id, name.tool), name.display);
    }
    system += summarize_note();
    return with_frame(std::move(system), history, "Select the next tool. Reply with the tool name only.");
}

std::vector<Message> argument_prompt(std::string_view system_prompt, const ToolSpec& spec,
                                     std::span<const Message> history) {
    std::string system(system_prompt);
    system += "\n\nTool to call:\n" + render_tool(spec);
    return with_frame(std::move(system), history,
                      "Write the arguments for " + spec.name +
                          " as one JSON object that matches its parameters. Reply with the JSON only.");
}

std::vector<Message> argument_retry_messages(std::string_view rejected_reply,
                                             std::span<const std::string> violations) {
    std::string text = "Those arguments were rejected:\n";
    for (const auto& v : violations) {
        text += "- " + v + "\n";
    }
    text += "Reply with a corrected JSON object only.";
    return {{Role::assistant, std::string(rejected_reply)}, {Role::user, std::move(text)}};
}

std::vector<Message> summary_prompt(std::string_view system_prompt, std::span<const Message> history) {
    return with_frame(std::string(system_prompt), history,
                      "Summarize for the user what the tool calls above found or changed.");
}

std::string render_chat(std::span<const Message> messages) {
    std::string out;
    for (const auto& m : messages) {
        out += "<|im_start|>";
        out += to_string(m.role);
        out += "\n";
        out += m.content;
        out += "<|im_end|>\n";
    }
    out += "<|im_start|>assistant\n";
    return out;
}

} // namespace splitcall::prompts
