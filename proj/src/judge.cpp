#include "splitcall/judge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fcntl.h>
#include <map>
#include <sys/stat.h>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/error.hpp"
#include "splitcall/prompts.hpp"

namespace splitcall {

namespace fs = std::filesystem;

std::string_view to_string(RequirementKind kind) noexcept {
    switch (kind) {
    case RequirementKind::listing: return "listing";
    case RequirementKind::metadata: return "metadata";
    case RequirementKind::content: return "content";
    case RequirementKind::range: return "range";
    }
    return "listing";
}

RequirementKind requirement_kind_from_string(std::string_view text) {
    if (text == "listing") return RequirementKind::listing;
    if (text == "metadata") return RequirementKind::metadata;
    if (text == "content") return RequirementKind::content;
    if (text == "range") return RequirementKind::range;
    throw Error(Errc::invalid_config, "unknown requirement kind: " + std::string(text));
}

namespace {

const std::set<std::string> kMetadataFields = {"size", "modified", "permissions"};

std::string normalize_path(std::string_view raw) {
    std::string p = fs::path(std::string(raw)).lexically_normal().generic_string();
    while (p.size() > 1 && p.back() == '/') p.pop_back();
    if (p.rfind("./", 0) == 0) p = p.substr(2);
    return p;
}

std::string parent_of(const std::string& item) {
    auto slash = item.rfind('/');
    return slash == std::string::npos ? "" : item.substr(0, slash);
}

std::string basename_of(const std::string& item) {
    auto slash = item.rfind('/');
    return slash == std::string::npos ? item : item.substr(slash + 1);
}

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-' || static_cast<unsigned char>(c) >= 0x80;
}

// Occurrence of `needle` not embedded in a longer file name.
bool contains_token(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return false;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !is_name_char(hay[pos - 1]) || hay[pos - 1] == '/';
        const auto end = pos + needle.size();
        const bool right = end == hay.size() || !is_name_char(hay[end]);
        if (left && right) return true;
    }
    return false;
}

bool contains_collapsed(const std::string& hay_collapsed, std::string_view needle) {
    return hay_collapsed.find(collapse_whitespace(needle)) != std::string::npos;
}

std::vector<std::string> argument_paths(const json& args) {
    std::vector<std::string> out;
    if (!args.is_object()) return out;
    for (const char* key : {"path", "source", "destination"}) {
        if (args.contains(key) && args[key].is_string()) out.push_back(normalize_path(args[key].get<std::string>()));
    }
    if (args.contains("paths") && args["paths"].is_array()) {
        for (const auto& p : args["paths"]) {
            if (p.is_string()) out.push_back(normalize_path(p.get<std::string>()));
        }
    }
    return out;
}

// `arg` names `target` directly, or as an absolute path ending in it.
bool path_matches(const std::string& arg, const std::string& target) {
    if (target.empty()) return arg == "." || arg.empty();
    return arg == target || (arg.size() > target.size() && arg.compare(arg.size() - target.size(), target.size(), target) == 0 &&
                             arg[arg.size() - target.size() - 1] == '/');
}

bool names_item(const Step& step, const std::string& item) {
    for (const auto& a : argument_paths(step.arguments)) {
        if (path_matches(a, item)) return true;
    }
    return false;
}

bool names_ancestor(const Step& step, const std::string& item) {
    for (const auto& a : argument_paths(step.arguments)) {
        if (a == "." || a.empty()) return true;
        for (std::string dir = parent_of(item); !dir.empty(); dir = parent_of(dir)) {
            if (path_matches(a, dir)) return true;
        }
    }
    return false;
}

std::vector<std::string> split_lines(const std::string& content) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        auto nl = content.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string range_text(const std::string& content, const LineRange& range) {
    auto lines = split_lines(content);
    const std::size_t n = std::min(range.lines, lines.size());
    std::size_t first = range.from == LineRange::From::head ? 0 : lines.size() - n;
    std::string out;
    for (std::size_t i = first; i < first + n; ++i) out += lines[i] + "\n";
    return out;
}

std::string metadata_value(const FsEntry& entry, const std::string& field) {
    if (field == "size") return std::to_string(entry.size);
    if (field == "permissions") return entry.permissions;
    return entry.modified;
}

bool satisfies(const AtomicRequirement& req, const FsEntry& entry, const Step& step) {
    if (!req.satisfied_by.count(step.tool) || step.result.status != ToolStatus::ok) return false;
    const auto& payload = step.result.payload;
    const auto collapsed = collapse_whitespace(payload);
    const auto base = basename_of(req.item);

    switch (req.kind) {
    case RequirementKind::listing:
        return contains_token(payload, base) &&
               (names_ancestor(step, req.item) || names_item(step, req.item) || contains_token(payload, req.item));
    case RequirementKind::metadata: {
        const auto value = metadata_value(entry, req.field);
        const bool direct = names_item(step, req.item) || contains_token(payload, req.item);
        if (direct && (contains_collapsed(collapsed, req.field + ": " + value) ||
                       contains_collapsed(collapsed, "\"" + req.field + "\": " + value) ||
                       contains_collapsed(collapsed, "\"" + req.field + "\":" + value) ||
                       contains_collapsed(collapsed, "\"" + req.field + "\": \"" + value + "\"") ||
                       contains_collapsed(collapsed, "\"" + req.field + "\":\"" + value + "\""))) {
            return true;
        }
        // Directory listings carry sizes inline.
        return req.field == "size" && names_ancestor(step, req.item) &&
               contains_collapsed(collapsed, base + " (" + value + " bytes)");
    }
    case RequirementKind::content:
        return !step.result.truncated && names_item(step, req.item) && entry.content &&
               contains_collapsed(collapsed, *entry.content);
    case RequirementKind::range:
        return !step.result.truncated && names_item(step, req.item) && entry.content &&
               contains_collapsed(collapsed, range_text(*entry.content, req.range));
    }
    return false;
}

std::int64_t parse_iso8601_utc(const std::string& text) {
    std::tm tm{};
    const char* end = ::strptime(text.c_str(), "%Y-%m-%dT%H:%M:%S", &tm);
    if (!end) {
        throw Error(Errc::invalid_config, "bad timestamp: " + text);
    }
    return static_cast<std::int64_t>(::timegm(&tm));
}

void set_mtime(const fs::path& path, const std::string& iso) {
    if (iso.empty()) return;
    timespec times[2];
    times[0].tv_sec = parse_iso8601_utc(iso);
    times[0].tv_nsec = 0;
    times[1] = times[0];
    if (::utimensat(AT_FDCWD, path.c_str(), times, 0) != 0) {
        throw Error(Errc::io_error, "cannot set times on " + path.string());
    }
}

} // namespace

const FsEntry* GroundTruth::find(std::string_view path) const {
    const auto wanted = normalize_path(path);
    for (const auto& e : fs_status) {
        if (normalize_path(e.path) == wanted) return &e;
    }
    return nullptr;
}

void GroundTruth::validate() const {
    std::set<std::string> ids;
    for (const auto& r : requirements) {
        const auto where = "requirement " + r.id;
        if (r.id.empty()) throw Error(Errc::invalid_config, "requirement without id");
        if (!ids.insert(r.id).second) throw Error(Errc::invalid_config, "duplicate requirement id " + r.id);
        if (r.satisfied_by.empty()) throw Error(Errc::invalid_config, where + ": satisfied_by is empty");
        const FsEntry* entry = find(r.item);
        if (!entry) throw Error(Errc::invalid_config, where + ": item not in fs_status: " + r.item);
        if (r.kind == RequirementKind::metadata && !kMetadataFields.count(r.field)) {
            throw Error(Errc::invalid_config, where + ": unknown metadata field '" + r.field + "'");
        }
        if ((r.kind == RequirementKind::content || r.kind == RequirementKind::range) && !entry->content) {
            throw Error(Errc::invalid_config, where + ": fs_status has no content for " + r.item);
        }
        if (r.kind == RequirementKind::range && r.range.lines == 0) {
            throw Error(Errc::invalid_config, where + ": range needs a positive line count");
        }
    }
}

json to_json(const FsEntry& e) {
    json out{{"path", e.path},
             {"type", e.is_directory ? "directory" : "file"},
             {"size", e.size},
             {"modified", e.modified},
             {"permissions", e.permissions}};
    if (e.content) out["content"] = *e.content;
    return out;
}

FsEntry fs_entry_from_json(const json& j) {
    FsEntry e;
    e.path = j.at("path").get<std::string>();
    e.is_directory = j.value("type", std::string("file")) == "directory";
    e.size = j.value("size", std::uint64_t{0});
    e.modified = j.value("modified", std::string{});
    e.permissions = j.value("permissions", std::string(e.is_directory ? "755" : "644"));
    if (j.contains("content") && j["content"].is_string()) {
        e.content = j["content"].get<std::string>();
        if (!j.contains("size")) e.size = e.content->size();
    }
    return e;
}

json to_json(const AtomicRequirement& r) {
    json out{{"id", r.id}, {"kind", to_string(r.kind)}, {"item", r.item}, {"satisfied_by", r.satisfied_by}};
    if (r.kind == RequirementKind::metadata) out["field"] = r.field;
    if (r.kind == RequirementKind::range) {
        out["range"] = {{r.range.from == LineRange::From::head ? "head" : "tail", r.range.lines}};
    }
    return out;
}

AtomicRequirement atomic_requirement_from_json(const json& j) {
    AtomicRequirement r;
    r.id = j.at("id").get<std::string>();
    r.kind = requirement_kind_from_string(j.at("kind").get<std::string>());
    r.item = j.at("item").get<std::string>();
    r.field = j.value("field", std::string{});
    if (r.kind == RequirementKind::range) {
        const auto& range = j.at("range");
        if (range.contains("head")) {
            r.range = {LineRange::From::head, range["head"].get<std::size_t>()};
        } else {
            r.range = {LineRange::From::tail, range.at("tail").get<std::size_t>()};
        }
    }
    r.satisfied_by = j.at("satisfied_by").get<std::set<std::string>>();
    return r;
}

json to_json(const GroundTruth& truth) {
    json fs_status = json::array();
    for (const auto& e : truth.fs_status) fs_status.push_back(to_json(e));
    json reqs = json::array();
    for (const auto& r : truth.requirements) reqs.push_back(to_json(r));
    return json{{"fs_status", fs_status}, {"requirements", reqs}};
}

GroundTruth ground_truth_from_json(const json& j) {
    GroundTruth truth;
    try {
        for (const auto& e : j.at("fs_status")) truth.fs_status.push_back(fs_entry_from_json(e));
        for (const auto& r : j.at("requirements")) truth.requirements.push_back(atomic_requirement_from_json(r));
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_config, std::string("bad ground truth: ") + e.what());
    }
    truth.validate();
    return truth;
}

GroundTruth load_ground_truth(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
    try {
        return ground_truth_from_json(j);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<FsEntry> snapshot_fs(const fs::path& root, std::size_t max_content_bytes) {
    std::vector<FsEntry> out;
    for (const auto& it : fs::recursive_directory_iterator(root)) {
        if (it.is_symlink()) continue;
        auto info = stat_file(it.path());
        FsEntry e;
        e.path = it.path().lexically_relative(root).generic_string();
        e.is_directory = info.is_directory;
        e.size = info.is_directory ? 0 : info.size;
        e.modified = info.modified;
        e.permissions = info.permissions;
        if (info.is_file && info.size <= max_content_bytes) e.content = read_text_file(it.path());
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const FsEntry& a, const FsEntry& b) { return a.path < b.path; });
    return out;
}

void materialize_fs(std::span<const FsEntry> entries, const fs::path& root) {
    fs::create_directories(root);
    auto perms_of = [](const std::string& octal) {
        return static_cast<fs::perms>(std::stoul(octal, nullptr, 8)) & fs::perms::mask;
    };
    for (const auto& e : entries) {
        const auto path = root / e.path;
        if (e.is_directory) {
            fs::create_directories(path);
            continue;
        }
        fs::create_directories(path.parent_path());
        write_file_atomic(path, e.content ? *e.content : std::string(e.size, 'x'));
        fs::permissions(path, perms_of(e.permissions));
        set_mtime(path, e.modified);
    }
    // Directories last, deepest first: creating children bumps parent mtimes.
    std::vector<const FsEntry*> dirs;
    for (const auto& e : entries) {
        if (e.is_directory) dirs.push_back(&e);
    }
    std::sort(dirs.begin(), dirs.end(), [](const FsEntry* a, const FsEntry* b) { return a->path > b->path; });
    for (const auto* d : dirs) {
        fs::permissions(root / d->path, perms_of(d->permissions));
        set_mtime(root / d->path, d->modified);
    }
}

json to_json(const CoverageReport& r) {
    auto opt = [](const auto& v) { return v ? json(*v) : json(); };
    json out{{"total", opt(r.total)},
             {"satisfied", opt(r.satisfied)},
             {"coverage_percent", opt(r.coverage_percent)},
             {"score", r.score},
             {"reasoning", r.reasoning}};
    if (r.total) out["unsatisfied"] = r.unsatisfied;
    return out;
}

int score(double coverage_percent) {
    if (std::isnan(coverage_percent) || coverage_percent < 0.0 || coverage_percent > 100.0) {
        throw Error(Errc::out_of_range, "coverage percent must be within [0, 100]");
    }
    // The epsilon keeps 45 (i.e. 4.5 after division) from landing a hair below .5.
    const int s = static_cast<int>(std::floor(coverage_percent / 10.0 + 0.5 + 1e-9));
    return std::clamp(s, 0, 10);
}

int score_from_counts(std::size_t satisfied, std::size_t total) {
    if (total == 0) return 0;
    // floor(10 s / t + 1/2) in integers
    return static_cast<int>(std::min<std::size_t>((20 * satisfied + total) / (2 * total), 10));
}

CoverageReport check_coverage(const GroundTruth& truth, const Trajectory& trajectory) {
    CoverageReport report;
    const std::size_t total = truth.requirements.size();
    std::size_t satisfied = 0;
    for (const auto& req : truth.requirements) {
        const FsEntry* entry = truth.find(req.item);
        bool ok = false;
        if (entry) {
            for (const auto& step : trajectory.steps) {
                if (satisfies(req, *entry, step)) {
                    ok = true;
                    break;
                }
            }
        }
        if (ok) {
            ++satisfied;
        } else {
            report.unsatisfied.push_back(req.id);
        }
    }
    report.total = total;
    report.satisfied = satisfied;
    report.coverage_percent = total == 0 ? 0.0 : 100.0 * static_cast<double>(satisfied) / static_cast<double>(total);
    report.score = score_from_counts(satisfied, total);
    if (total == 0) {
        report.reasoning = "No atomic requirements; coverage set to 0%.";
    } else {
        report.reasoning = std::to_string(satisfied) + " of " + std::to_string(total) +
                           " atomic requirements satisfied (" + format_percent(*report.coverage_percent) + "%).";
        if (!report.unsatisfied.empty()) {
            report.reasoning += " Unsatisfied:";
            for (const auto& id : report.unsatisfied) report.reasoning += " " + id;
            report.reasoning += ".";
        }
    }
    return report;
}

std::vector<Message> judge_messages(const Trajectory& trajectory, const GroundTruth& truth,
                                    std::span<const ToolSpec> tools, std::string_view instructions) {
    json fs_status = json::array();
    for (const auto& e : truth.fs_status) {
        json j = to_json(e);
        j.erase("content");
        fs_status.push_back(std::move(j));
    }
    std::string descriptions;
    for (const auto& t : tools) descriptions += prompts::render_tool(t);
    json calls = json::array();
    for (const auto& s : trajectory.steps) {
        calls.push_back({{"tool_call", {{"name", s.tool}, {"arguments", s.arguments}}},
                         {"tool_response", prompts::tool_result_message(s.result).content}});
    }
    std::string user = "fs_status:\n" + fs_status.dump(2) + "\n\ntool descriptions:\n" + descriptions +
                       "\nquery:\n" + trajectory.query + "\n\ntool calls:\n" +
                       calls.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
    return {{Role::system, std::string(instructions)}, {Role::user, std::move(user)}};
}

namespace {

std::optional<json> parse_object(std::string_view text) {
    try {
        auto j = json::parse(text);
        if (j.is_object()) return j;
    } catch (const json::parse_error&) {
    }
    return std::nullopt;
}

} // namespace

CoverageReport parse_verdict(std::string_view reply) {
    auto verdict = parse_object(trim(reply));
    if (!verdict) {
        // the single reparse: drop fences and anything around the outermost braces
        auto stripped = strip_code_fences(reply);
        auto open = stripped.find('{');
        auto close = stripped.rfind('}');
        if (open != std::string::npos && close != std::string::npos && close > open) {
            verdict = parse_object(std::string_view(stripped).substr(open, close - open + 1));
        }
    }
    if (!verdict) {
        throw Error(Errc::malformed_verdict, "judge reply is not a JSON object");
    }
    const auto& v = *verdict;
    if (v.size() != 2 || !v.contains("Reasoning_ToolCoverage") || !v.contains("Score_ToolCoverage")) {
        throw Error(Errc::malformed_verdict,
                    "judge reply must have exactly Reasoning_ToolCoverage and Score_ToolCoverage");
    }
    const auto& reasoning = v["Reasoning_ToolCoverage"];
    const auto& s = v["Score_ToolCoverage"];
    if (!reasoning.is_string()) {
        throw Error(Errc::malformed_verdict, "Reasoning_ToolCoverage must be a string");
    }
    if (!s.is_number_integer()) {
        throw Error(Errc::malformed_verdict, "Score_ToolCoverage must be an integer, got " + s.dump());
    }
    const auto value = s.get<std::int64_t>();
    if (value < 0 || value > 10) {
        throw Error(Errc::malformed_verdict, "Score_ToolCoverage out of range: " + std::to_string(value));
    }
    CoverageReport report;
    report.score = static_cast<int>(value);
    report.reasoning = reasoning.get<std::string>();
    return report;
}

CoverageReport llm_judge(const Trajectory& trajectory, const GroundTruth& truth, std::span<const ToolSpec> tools,
                         Gateway& judge, std::string_view instructions) {
    CompletionRequest request;
    request.messages = judge_messages(trajectory, truth, tools, instructions);
    request.adapter = AdapterId::base();
    request.max_tokens = 1024;
    Completion completion;
    try {
        completion = judge.complete(request);
    } catch (const Error& e) {
        throw Error(Errc::judge_unreachable, std::string("judge backend failed: ") + e.what());
    }
    return parse_verdict(completion.content);
}

double aggregate(std::span<const CoverageReport> reports) {
    if (reports.empty()) {
        throw Error(Errc::empty_input, "no reports to aggregate");
    }
    double sum = 0.0;
    for (const auto& r : reports) sum += r.score * 10.0;
    return sum / static_cast<double>(reports.size());
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

} // namespace splitcall
