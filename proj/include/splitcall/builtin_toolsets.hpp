#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "splitcall/toolhub.hpp"

namespace splitcall {

// Builtin kinds:
//   filesystem  12 file tools confined to the policy's allowed roots
//   notion      9 tools over an in-memory page/database workspace
//   monday      9 tools over in-memory boards and items
//   debug       sleep/echo/emit/fail, for exercising the sandbox
//   empty       advertises no tools
std::unique_ptr<Toolset> make_builtin_toolset(const std::string& kind);

// Metadata in the exact textual form get_file_info reports. Ground-truth
// snapshots use the same formatting so the judge can match values verbatim.
struct FileInfo {
    std::uint64_t size = 0;
    std::string modified;
    std::string accessed;
    std::string changed;
    std::string permissions;  // three octal digits, e.g. "644"
    bool is_directory = false;
    bool is_file = false;
};

FileInfo stat_file(const std::filesystem::path& path);
std::vector<std::string> builtin_kinds();

namespace detail {

std::unique_ptr<Toolset> make_filesystem_toolset();
std::unique_ptr<Toolset> make_notion_toolset();
std::unique_ptr<Toolset> make_monday_toolset();
std::unique_ptr<Toolset> make_debug_toolset();

// Terse builder for the argument schemas of builtin tools.
json object_schema(json properties, std::vector<std::string> required);
ToolSpec make_spec(std::string name, std::string description, json schema);

} // namespace detail

} // namespace splitcall
