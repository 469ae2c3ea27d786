#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "splitcall/gateway.hpp"
#include "splitcall/toolhub.hpp"
#include "splitcall/trajectory.hpp"

// Prompt construction shared by the orchestrator (live calls) and the dataset
// extractor (replayed contexts). Both must produce byte-identical text, so
// everything here is a pure function of its inputs.
namespace splitcall::prompts {

inline constexpr std::string_view kSummarize = "summarize";

extern const std::string kDefaultSystemPrompt;

// "### tool: <name>" block with description and canonical parameter schema.
std::string render_tool(const ToolSpec& spec, std::string_view display_name);
std::string render_tool(const ToolSpec& spec);

// Canonical assistant tool-call turn: {"name":...,"arguments":{...}}. The
// name comes first so a selection prediction never sees the arguments.
std::string tool_call_turn(std::string_view tool, const json& arguments);

// Byte ranges of the name value and of the arguments object inside a turn
// produced by tool_call_turn().
struct TurnLayout {
    std::pair<std::size_t, std::size_t> name;
    std::pair<std::size_t, std::size_t> arguments;
};
TurnLayout tool_call_layout(std::string_view tool, const json& arguments);

Message tool_result_message(const ToolResult& result);

// User query followed by one assistant turn and one tool message per step.
std::vector<Message> history(std::string_view query, std::span<const Step> steps);

std::vector<Message> routing_prompt(std::string_view system_prompt, const Catalog& catalog,
                                    std::span<const Message> history);

std::vector<Message> selection_prompt(std::string_view system_prompt, const Catalog& catalog,
                                      const std::string& toolset_id, std::span<const Message> history);

// Every tool of every toolset in one list (no routing). Names that collide
// across toolsets are shown qualified as "<toolset>/<tool>".
std::vector<Message> flat_selection_prompt(std::string_view system_prompt, const Catalog& catalog,
                                           std::span<const Message> history);

struct FlatName {
    std::string display;
    std::string toolset_id;
    std::string tool;
};
std::vector<FlatName> flat_tool_names(const Catalog& catalog);

std::vector<Message> argument_prompt(std::string_view system_prompt, const ToolSpec& spec,
                                     std::span<const Message> history);

// Appended to an argument prompt after a reply failed validation.
std::vector<Message> argument_retry_messages(std::string_view rejected_reply,
                                             std::span<const std::string> violations);

std::vector<Message> summary_prompt(std::string_view system_prompt, std::span<const Message> history);

// ChatML-style flattening used as the training context: every message as
// <|im_start|>role\ncontent<|im_end|>\n, then an open assistant header.
std::string render_chat(std::span<const Message> messages);

} // namespace splitcall::prompts
