#include <algorithm>
#include <cstdio>
#include <fnmatch.h>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/stat.h>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/error.hpp"
#include "splitcall/sandbox.hpp"

namespace splitcall {

namespace fs = std::filesystem;

FileInfo stat_file(const fs::path& path) {
    struct stat st {};
    if (::stat(path.c_str(), &st) != 0) {
        throw std::runtime_error("cannot stat " + path.string());
    }
    FileInfo info;
    info.size = static_cast<std::uint64_t>(st.st_size);
    info.modified = format_iso8601_utc(st.st_mtim.tv_sec);
    info.accessed = format_iso8601_utc(st.st_atim.tv_sec);
    info.changed = format_iso8601_utc(st.st_ctim.tv_sec);
    char perms[8];
    std::snprintf(perms, sizeof(perms), "%03o", static_cast<unsigned>(st.st_mode & 0777));
    info.permissions = perms;
    info.is_directory = S_ISDIR(st.st_mode);
    info.is_file = S_ISREG(st.st_mode);
    return info;
}

namespace detail {

namespace {

json path_prop(const std::string& what) {
    return json{{"type", "string"}, {"description", what}};
}

std::vector<ToolSpec> filesystem_specs() {
    std::vector<ToolSpec> specs;
    specs.push_back(make_spec(
        "read_file",
        "Read the complete contents of a file as text. Pass head=N for only the first N lines "
        "or tail=N for only the last N lines.",
        object_schema({{"path", path_prop("File to read")},
                       {"head", {{"type", "integer"}, {"minimum", 1}}},
                       {"tail", {{"type", "integer"}, {"minimum", 1}}}},
                      {"path"})));
    specs.push_back(make_spec(
        "read_multiple_files",
        "Read several files in one call. Each file's contents are prefixed with its path.",
        object_schema({{"paths", {{"type", "array"}, {"items", {{"type", "string"}}}, {"minItems", 1}}}},
                      {"paths"})));
    specs.push_back(make_spec(
        "write_file",
        "Create a new file or overwrite an existing one with the given text content.",
        object_schema({{"path", path_prop("File to write")}, {"content", {{"type", "string"}}}},
                      {"path", "content"})));
    specs.push_back(make_spec(
        "edit_file",
        "Apply exact-text replacements to a file. Each edit replaces the first occurrence of "
        "oldText with newText. Set dryRun to preview without writing.",
        object_schema(
            {{"path", path_prop("File to edit")},
             {"edits",
              {{"type", "array"},
               {"minItems", 1},
               {"items", object_schema({{"oldText", {{"type", "string"}, {"minLength", 1}}},
                                        {"newText", {{"type", "string"}}}},
                                       {"oldText", "newText"})}}},
             {"dryRun", {{"type", "boolean"}}}},
            {"path", "edits"})));
    specs.push_back(make_spec(
        "create_directory",
        "Create a directory, including missing parents. Succeeds if it already exists.",
        object_schema({{"path", path_prop("Directory to create")}}, {"path"})));
    specs.push_back(make_spec(
        "list_directory",
        "List the entries of a directory, marking each as [DIR] or [FILE] and showing file "
        "sizes. sortBy orders entries by name (default) or by size, largest first.",
        object_schema({{"path", path_prop("Directory to list")},
                       {"sortBy", {{"type", "string"}, {"enum", {"name", "size"}}}}},
                      {"path"})));
    specs.push_back(make_spec(
        "directory_tree",
        "Return a recursive JSON tree of a directory. Each node has name, type, and children "
        "for directories.",
        object_schema({{"path", path_prop("Root of the tree")}}, {"path"})));
    specs.push_back(make_spec(
        "move_file",
        "Move or rename a file or directory. Fails if the destination already exists.",
        object_schema({{"source", path_prop("Existing path")},
                       {"destination", path_prop("New path")}},
                      {"source", "destination"})));
    specs.push_back(make_spec(
        "search_files",
        "Recursively search below a directory for entries whose names match a pattern. "
        "Plain patterns match case-insensitive substrings; * and ? act as wildcards.",
        object_schema({{"path", path_prop("Directory to search")},
                       {"pattern", {{"type", "string"}, {"minLength", 1}}},
                       {"excludePatterns", {{"type", "array"}, {"items", {{"type", "string"}}}}}},
                      {"path", "pattern"})));
    specs.push_back(make_spec(
        "get_file_info",
        "Retrieve metadata for a file or directory: size, modified, accessed and changed "
        "times, type, and permissions.",
        object_schema({{"path", path_prop("Path to inspect")}}, {"path"})));
    specs.push_back(make_spec(
        "list_allowed_directories",
        "List the directories this toolset is allowed to access.",
        object_schema(json::object(), {})));
    specs.push_back(make_spec(
        "delete_file",
        "Delete a single file. Directories are not removed.",
        object_schema({{"path", path_prop("File to delete")}}, {"path"})));
    return specs;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_bytes(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open file for writing");
    }
    out << content;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        out += lines[i];
        if (i + 1 < to) {
            out += '\n';
        }
    }
    return out;
}

bool name_matches(const std::string& name, const std::string& pattern) {
    if (pattern.find_first_of("*?[") != std::string::npos) {
        return ::fnmatch(pattern.c_str(), name.c_str(), FNM_CASEFOLD) == 0;
    }
    return to_lower(name).find(to_lower(pattern)) != std::string::npos;
}

json tree_of(const fs::path& dir) {
    std::vector<fs::directory_entry> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        entries.push_back(e);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    json nodes = json::array();
    for (const auto& e : entries) {
        auto status = e.symlink_status();
        json node{{"name", e.path().filename().string()}};
        if (fs::is_directory(status)) {
            node["type"] = "directory";
            node["children"] = tree_of(e.path());
        } else if (fs::is_symlink(status)) {
            node["type"] = "symlink";
        } else {
            node["type"] = "file";
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

class FilesystemToolset : public Toolset {
public:
    std::vector<ToolSpec> tools() override { return filesystem_specs(); }

    std::string description() const override {
        return "Local files and directories: read, write, edit, list, search, move, delete, "
               "and inspect metadata inside the allowed directories.";
    }

    bool requires_allowed_roots() const override { return true; }

    ToolResult call(const ToolSpec& spec, const json& args, const SandboxPolicy& policy) override {
        PathGuard guard(policy.allowed_roots);
        // Paths are resolved here, in the parent; the child only touches
        // already-confined paths.
        return run_isolated(prepare(spec.name, args, guard), policy);
    }

private:
    static std::string str(const json& args, const char* key) {
        return args.at(key).get<std::string>();
    }

    std::function<std::string()> prepare(const std::string& tool, const json& args,
                                         const PathGuard& guard) const {
        if (tool == "read_file") {
            auto path = guard.resolve(str(args, "path"));
            std::optional<std::size_t> head, tail;
            if (args.contains("head")) head = args["head"].get<std::size_t>();
            if (args.contains("tail")) tail = args["tail"].get<std::size_t>();
            return [path, head, tail] {
                if (head && tail) {
                    throw std::runtime_error("head and tail cannot be combined");
                }
                if (fs::is_directory(path)) {
                    throw std::runtime_error("path is a directory");
                }
                auto content = read_bytes(path);
                if (!head && !tail) {
                    return content;
                }
                auto lines = split_lines(content);
                if (head) {
                    return join_lines(lines, 0, std::min(*head, lines.size()));
                }
                auto from = lines.size() > *tail ? lines.size() - *tail : 0;
                return join_lines(lines, from, lines.size());
            };
        }
        if (tool == "read_multiple_files") {
            std::vector<std::pair<std::string, fs::path>> files;
            for (const auto& p : args.at("paths")) {
                auto requested = p.get<std::string>();
                files.emplace_back(requested, guard.resolve(requested));
            }
            return [files] {
                std::string out;
                for (std::size_t i = 0; i < files.size(); ++i) {
                    if (i) out += "\n---\n";
                    try {
                        out += files[i].first + ":\n" + read_bytes(files[i].second);
                    } catch (const std::exception& e) {
                        out += files[i].first + ": Error - " + e.what();
                    }
                }
                return out;
            };
        }
        if (tool == "write_file") {
            auto path = guard.resolve(str(args, "path"));
            auto content = str(args, "content");
            auto shown = guard.display(path);
            return [path, content, shown] {
                if (fs::is_directory(path)) {
                    throw std::runtime_error("path is a directory");
                }
                write_bytes(path, content);
                return "Successfully wrote to " + shown;
            };
        }
        if (tool == "edit_file") {
            auto path = guard.resolve(str(args, "path"));
            auto edits = args.at("edits");
            bool dry_run = args.value("dryRun", false);
            auto shown = guard.display(path);
            return [path, edits, dry_run, shown] {
                auto text = read_bytes(path);
                std::string diff;
                for (const auto& edit : edits) {
                    auto old_text = edit.at("oldText").get<std::string>();
                    auto new_text = edit.at("newText").get<std::string>();
                    auto pos = text.find(old_text);
                    if (pos == std::string::npos) {
                        throw std::runtime_error("could not find exact match for edit: " + old_text);
                    }
                    text.replace(pos, old_text.size(), new_text);
                    for (const auto& line : split_lines(old_text)) diff += "-" + line + "\n";
                    for (const auto& line : split_lines(new_text)) diff += "+" + line + "\n";
                }
                if (!dry_run) {
                    write_bytes(path, text);
                }
                return std::string(dry_run ? "Dry run for " : "Edited ") + shown + "\n" + diff;
            };
        }
        if (tool == "create_directory") {
            auto path = guard.resolve(str(args, "path"));
            auto shown = guard.display(path);
            return [path, shown] {
                fs::create_directories(path);
                return "Successfully created directory " + shown;
            };
        }
        if (tool == "list_directory") {
            auto path = guard.resolve(str(args, "path"));
            bool by_size = args.value("sortBy", std::string("name")) == "size";
            return [path, by_size] {
                struct Row {
                    std::string name;
                    bool dir;
                    std::uintmax_t size;
                };
                std::vector<Row> rows;
                for (const auto& e : fs::directory_iterator(path)) {
                    std::error_code ec;
                    bool dir = e.is_directory(ec);
                    std::uintmax_t size = dir ? 0 : e.file_size(ec);
                    rows.push_back({e.path().filename().string(), dir, ec ? 0 : size});
                }
                std::sort(rows.begin(), rows.end(), [by_size](const Row& a, const Row& b) {
                    if (by_size && a.size != b.size) return a.size > b.size;
                    return a.name < b.name;
                });
                std::string out;
                for (const auto& r : rows) {
                    if (r.dir) {
                        out += "[DIR] " + r.name + "\n";
                    } else {
                        out += "[FILE] " + r.name + " (" + std::to_string(r.size) + " bytes)\n";
                    }
                }
                return out.empty() ? std::string("(empty directory)") : out;
            };
        }
        if (tool == "directory_tree") {
            auto path = guard.resolve(str(args, "path"));
            return [path] {
                if (!fs::is_directory(path)) {
                    throw std::runtime_error("path is not a directory");
                }
                return tree_of(path).dump(2);
            };
        }
        if (tool == "move_file") {
            auto source = guard.resolve_entry(str(args, "source"));
            auto destination = guard.resolve(str(args, "destination"));
            auto shown_src = guard.display(source);
            auto shown_dst = guard.display(destination);
            return [source, destination, shown_src, shown_dst] {
                if (fs::exists(fs::symlink_status(destination))) {
                    throw std::runtime_error("destination already exists");
                }
                fs::rename(source, destination);
                return "Successfully moved " + shown_src + " to " + shown_dst;
            };
        }
        if (tool == "search_files") {
            auto root = guard.resolve(str(args, "path"));
            auto pattern = str(args, "pattern");
            std::vector<std::string> excludes;
            if (args.contains("excludePatterns")) {
                excludes = args["excludePatterns"].get<std::vector<std::string>>();
            }
            auto base = guard.display(root);
            return [root, pattern, excludes, base] {
                std::vector<std::string> hits;
                for (auto it = fs::recursive_directory_iterator(
                         root, fs::directory_options::skip_permission_denied);
                     it != fs::recursive_directory_iterator(); ++it) {
                    auto rel = it->path().lexically_relative(root).generic_string();
                    bool excluded = false;
                    for (const auto& ex : excludes) {
                        excluded = excluded || ::fnmatch(ex.c_str(), rel.c_str(), 0) == 0 ||
                                   name_matches(it->path().filename().string(), ex);
                    }
                    if (excluded) {
                        if (it->is_directory()) it.disable_recursion_pending();
                        continue;
                    }
                    if (name_matches(it->path().filename().string(), pattern)) {
                        hits.push_back(base == "." ? rel : base + "/" + rel);
                    }
                }
                std::sort(hits.begin(), hits.end());
                std::string out;
                for (const auto& h : hits) out += h + "\n";
                return out.empty() ? std::string("No matches found") : out;
            };
        }
        if (tool == "get_file_info") {
            auto path = guard.resolve(str(args, "path"));
            auto shown = guard.display(path);
            return [path, shown] {
                auto info = stat_file(path);
                std::string out;
                out += "path: " + shown + "\n";
                out += "size: " + std::to_string(info.size) + "\n";
                out += "modified: " + info.modified + "\n";
                out += "accessed: " + info.accessed + "\n";
                out += "changed: " + info.changed + "\n";
                out += std::string("isDirectory: ") + (info.is_directory ? "true" : "false") + "\n";
                out += std::string("isFile: ") + (info.is_file ? "true" : "false") + "\n";
                out += "permissions: " + info.permissions + "\n";
                return out;
            };
        }
        if (tool == "list_allowed_directories") {
            auto roots = guard.roots();
            return [roots] {
                std::string out = "Allowed directories:\n";
                for (const auto& r : roots) out += r.string() + "\n";
                return out;
            };
        }
        if (tool == "delete_file") {
            auto path = guard.resolve_entry(str(args, "path"));
            auto shown = guard.display(path);
            return [path, shown] {
                auto status = fs::symlink_status(path);
                if (!fs::exists(status)) {
                    throw std::runtime_error("no such file: " + shown);
                }
                if (fs::is_directory(status)) {
                    throw std::runtime_error("refusing to delete a directory: " + shown);
                }
                fs::remove(path);
                return "Successfully deleted " + shown;
            };
        }
        throw Error(Errc::unknown_tool, "unknown tool: filesystem/" + tool);
    }
};

} // namespace

std::unique_ptr<Toolset> make_filesystem_toolset() { return std::make_unique<FilesystemToolset>(); }

} // namespace detail

} // namespace splitcall
