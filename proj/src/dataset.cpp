#include "splitcall/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include "splitcall/error.hpp"
#include "splitcall/prompts.hpp"

namespace splitcall {

namespace fs = std::filesystem;

json to_json(const SyntheticQuery& q) {
    return json{{"id", q.id}, {"toolset_id", q.toolset_id}, {"tool", q.tool}, {"text", q.text}};
}

SyntheticQuery synthetic_query_from_json(const json& j) {
    return SyntheticQuery{j.at("id").get<std::string>(), j.at("toolset_id").get<std::string>(),
                          j.at("tool").get<std::string>(), j.at("text").get<std::string>()};
}

void write_queries(const fs::path& path, std::span<const SyntheticQuery> queries) {
    std::string out;
    for (const auto& q : queries) out += canonical_dump(to_json(q)) + "\n";
    write_file_atomic(path, out);
}

std::vector<SyntheticQuery> read_queries(const fs::path& path) {
    std::vector<SyntheticQuery> out;
    for (const auto& row : read_jsonl(path)) out.push_back(synthetic_query_from_json(row));
    return out;
}

namespace {

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool contains_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) {
        const bool left = pos == 0 || !is_word_char(haystack[pos - 1]);
        const auto end = pos + needle.size();
        const bool right = end == haystack.size() || !is_word_char(haystack[end]);
        if (left && right) return true;
    }
    return false;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

} // namespace

std::vector<std::string> lint_query(std::string_view text, std::span<const std::string> tool_names) {
    static const std::regex absolute(R"((^|[\s"'`(\[<,;:=])(/[^\s/]|~/|[A-Za-z]:[\\/]))");
    std::vector<std::string> problems;
    const std::string s(text);
    if (trim(s).empty()) {
        problems.emplace_back("empty query");
        return problems;
    }
    if (s.find('\n') != std::string::npos) {
        problems.emplace_back("more than one line");
    }
    if (std::regex_search(s, absolute)) {
        problems.emplace_back("contains an absolute path");
    }
    const auto lowered = to_lower(s);
    for (const auto& name : tool_names) {
        if (contains_word(lowered, to_lower(name))) {
            problems.push_back("mentions tool name " + name);
        }
    }
    return problems;
}

const std::string kQueryGenerationTemplate =
    "Write a single request that a user might send to an assistant. Fulfilling it must require "
    "the $TOOL_NAME tool.\n"
    "Requirements:\n"
    "- One line of plain English, with no quotes, numbering, labels, code blocks or commentary.\n"
    "- No absolute paths: no leading \"/\", no \"~/\", no drive letters. Use relative subpaths such as "
    "notes/2025-03.md, or refer to the location loosely (\"in the shared folder\", \"in my workspace\").\n"
    "- Do not name any tool, parameter or schema.\n"
    "- Vary wording and tone from request to request: questions or commands, polite or blunt, "
    "conditional phrasing, active or passive voice.\n"
    "- Use varied file names and types (csv, json, md, txt, log, png, pdf, mp4, tar.gz, dotfiles, "
    "names with spaces, capitals or non-ASCII characters, nested folders) and concrete numbers "
    "(\"the last 20 lines\", \"photo3.jpg\", \"over 5 MB\").\n"
    "Tools available to the assistant: $GLOBAL_TOOL_LIST\n";

std::string query_generation_prompt(const ToolSpec& spec, std::span<const std::string> tool_names,
                                    const std::string& template_text) {
    std::string list;
    for (const auto& n : tool_names) list += (list.empty() ? "" : ", ") + n;
    std::string out = template_text;
    replace_all(out, "$GLOBAL_TOOL_LIST", list);
    replace_all(out, "$TOOL_NAME", spec.name);
    return out;
}

std::vector<SyntheticQuery> synthesize_queries(const ToolSpec& spec, std::size_t n, Gateway& generator,
                                               std::span<const std::string> tool_names,
                                               const SynthesisOptions& options) {
    std::vector<SyntheticQuery> out;
    if (n == 0) return out;
    CompletionRequest request;
    request.messages = {{Role::system, query_generation_prompt(spec, tool_names)},
                        {Role::user, "Write the request now."}};
    request.adapter = AdapterId::base();
    request.temperature = options.temperature;
    request.max_tokens = 256;

    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> last_problems;
        bool accepted = false;
        for (std::size_t attempt = 0; attempt <= options.retries_per_query; ++attempt) {
            std::string reply;
            try {
                reply = trim(generator.complete(request).content);
            } catch (const Error& e) {
                throw Error(Errc::generator_failure, std::string("query generator failed: ") + e.what());
            }
            if (reply.size() >= 2 && reply.front() == '"' && reply.back() == '"') {
                reply = trim(std::string_view(reply).substr(1, reply.size() - 2));
            }
            last_problems = lint_query(reply, tool_names);
            if (last_problems.empty()) {
                char suffix[24];
                std::snprintf(suffix, sizeof(suffix), "%04zu", i);
                out.push_back({spec.toolset_id + "." + spec.name + "." + suffix, spec.toolset_id, spec.name, reply});
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw Error(Errc::lint_budget_exhausted,
                        spec.name + ": query " + std::to_string(i) + " failed lint " +
                            std::to_string(options.retries_per_query + 1) + " times (" + last_problems.front() + ")");
        }
    }
    return out;
}

std::string_view to_string(InstanceKind kind) noexcept {
    return kind == InstanceKind::selection ? "selection" : "argument";
}

InstanceKind instance_kind_from_string(std::string_view text) {
    if (text == "selection") return InstanceKind::selection;
    if (text == "argument") return InstanceKind::argument;
    throw Error(Errc::parse_error, "unknown instance kind: " + std::string(text));
}

json to_json(const TrainingInstance& i) {
    json spans = json::array();
    for (const auto& [s, e] : i.mask_spans) spans.push_back({s, e});
    return json{{"kind", to_string(i.kind)},
                {"toolset_id", i.toolset_id},
                {"tool", i.tool ? json(*i.tool) : json()},
                {"context", i.context},
                {"target", i.target},
                {"mask_spans", spans},
                {"trajectory_id", i.trajectory_id},
                {"step_index", i.step_index}};
}

TrainingInstance training_instance_from_json(const json& j) {
    TrainingInstance i;
    i.kind = instance_kind_from_string(j.at("kind").get<std::string>());
    i.toolset_id = j.at("toolset_id").get<std::string>();
    if (j.contains("tool") && !j["tool"].is_null()) i.tool = j["tool"].get<std::string>();
    i.context = j.at("context").get<std::string>();
    i.target = j.at("target").get<std::string>();
    for (const auto& span : j.at("mask_spans")) {
        i.mask_spans.emplace_back(span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>());
    }
    i.trajectory_id = j.value("trajectory_id", std::string{});
    i.step_index = j.value("step_index", std::size_t{0});
    return i;
}

void write_instances(const fs::path& path, std::span<const TrainingInstance> instances) {
    std::string out;
    for (const auto& i : instances) out += canonical_dump(to_json(i)) + "\n";
    write_file_atomic(path, out);
}

std::vector<TrainingInstance> read_instances(const fs::path& path) {
    std::vector<TrainingInstance> out;
    for (const auto& row : read_jsonl(path)) out.push_back(training_instance_from_json(row));
    return out;
}

std::string masked_text(const TrainingInstance& instance) {
    std::string out;
    for (const auto& [s, e] : instance.mask_spans) {
        const auto b = byte_offset(instance.target, s);
        out += instance.target.substr(b, byte_offset(instance.target, e) - b);
    }
    return out;
}

std::vector<std::string> check_mask_spans(const TrainingInstance& instance) {
    std::vector<std::string> problems;
    const auto length = codepoint_count(instance.target);
    std::size_t previous_end = 0;
    for (std::size_t k = 0; k < instance.mask_spans.size(); ++k) {
        const auto [s, e] = instance.mask_spans[k];
        const auto where = "span " + std::to_string(k);
        if (s >= e) problems.push_back(where + " is empty or reversed");
        if (e > length) problems.push_back(where + " exceeds the target");
        if (k > 0 && s < previous_end) problems.push_back(where + " overlaps or is out of order");
        previous_end = e;
    }
    return problems;
}

namespace {

TrainingInstance make_instance(InstanceKind kind, const std::string& toolset, std::optional<std::string> tool,
                               std::string context, std::string target, std::pair<std::size_t, std::size_t> bytes,
                               const Trajectory& t, std::size_t step_index) {
    TrainingInstance i;
    i.kind = kind;
    i.toolset_id = toolset;
    i.tool = std::move(tool);
    i.mask_spans.emplace_back(codepoint_offset(target, bytes.first), codepoint_offset(target, bytes.second));
    i.context = std::move(context);
    i.target = std::move(target);
    i.trajectory_id = t.id;
    i.step_index = step_index;
    return i;
}

} // namespace

ExtractedInstances extract_instances(const Trajectory& t, const Catalog& catalog, std::string_view system_prompt) {
    if (t.steps.empty()) {
        throw Error(Errc::malformed_trajectory, "trajectory " + t.id + " has no steps");
    }
    ExtractedInstances out;
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
        const auto& step = t.steps[k];
        const ToolSpec* spec = catalog.find(step.toolset_id, step.tool);
        if (!spec) {
            throw Error(Errc::malformed_trajectory, "trajectory " + t.id + " step " + std::to_string(k) +
                                                        " uses unknown tool " + step.toolset_id + "/" + step.tool);
        }
        const auto hist = prompts::history(t.query, std::span(t.steps).first(k));
        const auto target = prompts::tool_call_turn(step.tool, step.arguments);
        const auto layout = prompts::tool_call_layout(step.tool, step.arguments);

        out.selection.push_back(make_instance(
            InstanceKind::selection, step.toolset_id, std::nullopt,
            prompts::render_chat(prompts::selection_prompt(system_prompt, catalog, step.toolset_id, hist)), target,
            layout.name, t, k));
        out.argument.push_back(make_instance(
            InstanceKind::argument, step.toolset_id, step.tool,
            prompts::render_chat(prompts::argument_prompt(system_prompt, *spec, hist)), target, layout.arguments, t,
            k));
    }
    if (t.terminated_by == Termination::summarize) {
        std::string toolset = t.final_toolset;
        if (toolset.empty()) toolset = t.steps.back().toolset_id;
        if (!catalog.toolsets.count(toolset)) {
            throw Error(Errc::malformed_trajectory, "trajectory " + t.id + " ends in unknown toolset " + toolset);
        }
        const auto hist = prompts::history(t.query, t.steps);
        const auto name = std::string(prompts::kSummarize);
        out.selection.push_back(make_instance(
            InstanceKind::selection, toolset, std::nullopt,
            prompts::render_chat(prompts::selection_prompt(system_prompt, catalog, toolset, hist)),
            prompts::tool_call_turn(name, json::object()), prompts::tool_call_layout(name, json::object()).name, t,
            t.steps.size()));
    }
    return out;
}

TrajectorySplit split_trajectories(std::size_t n, double ratio, std::uint64_t seed) {
    if (n < 2) {
        throw Error(Errc::too_few_trajectories, "need at least 2 trajectories to split, got " + std::to_string(n));
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(Errc::invalid_argument, "split ratio must be in (0, 1)");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    seeded_shuffle(order, seed);
    auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    TrajectorySplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return split;
}

DatasetSplit split_dataset(std::span<const Trajectory> trajectories, const Catalog& catalog,
                           std::string_view system_prompt, double ratio, std::uint64_t seed) {
    auto split = split_trajectories(trajectories.size(), ratio, seed);
    DatasetSplit out;
    out.seed = seed;
    auto emit = [&](const std::vector<std::size_t>& indices, std::vector<TrainingInstance>& dest,
                    std::vector<std::string>& ids) {
        for (auto idx : indices) {
            auto extracted = extract_instances(trajectories[idx], catalog, system_prompt);
            for (auto& i : extracted.selection) dest.push_back(std::move(i));
            for (auto& i : extracted.argument) dest.push_back(std::move(i));
            ids.push_back(trajectories[idx].id);
        }
    };
    emit(split.train, out.train, out.train_trajectories);
    emit(split.validation, out.validation, out.validation_trajectories);
    return out;
}

std::vector<SyntheticQuery> reserve_test_set(const std::map<std::string, std::vector<SyntheticQuery>>& by_tool,
                                             std::size_t total, std::uint64_t seed) {
    if (by_tool.empty()) {
        throw Error(Errc::insufficient_queries, "no query groups to reserve from");
    }
    for (const auto& [tool, queries] : by_tool) {
        if (queries.empty()) throw Error(Errc::insufficient_queries, "tool " + tool + " has no queries");
    }
    std::vector<std::string> tools;
    for (const auto& [tool, _] : by_tool) tools.push_back(tool);
    const std::size_t base = total / tools.size();
    const std::size_t remainder = total % tools.size();

    auto bonus = tools;
    seeded_shuffle(bonus, seed);
    std::set<std::string> gets_extra(bonus.begin(), bonus.begin() + static_cast<std::ptrdiff_t>(remainder));

    std::vector<SyntheticQuery> out;
    out.reserve(total);
    std::uint64_t group_seed = seed;
    for (const auto& tool : tools) {
        const std::size_t quota = base + (gets_extra.count(tool) ? 1 : 0);
        const auto& queries = by_tool.at(tool);
        if (queries.size() < quota) {
            throw Error(Errc::insufficient_queries, "tool " + tool + " has " + std::to_string(queries.size()) +
                                                        " queries, needs " + std::to_string(quota));
        }
        auto picked = queries;
        seeded_shuffle(picked, ++group_seed);
        out.insert(out.end(), picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(quota));
    }
    return out;
}

std::vector<std::string> lint_trajectories(std::span<const Trajectory> trajectories, std::size_t max_steps) {
    std::vector<std::string> flagged;
    for (const auto& t : trajectories) {
        if (t.steps.size() > max_steps) flagged.push_back(t.id);
    }
    return flagged;
}

} // namespace splitcall
