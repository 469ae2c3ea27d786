#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "splitcall/toolhub.hpp"

namespace splitcall {

// Confines tool paths to a set of root directories.
//
// Relative paths are interpreted against the first root. A request is
// rejected when its lexically normalized form leaves every root, or when
// resolving symlinks along the existing prefix lands outside every root.
// Paths that do not exist yet (write targets) are checked through their
// nearest existing ancestor.
class PathGuard {
public:
    explicit PathGuard(const std::vector<std::filesystem::path>& roots);

    // Returns the resolved path, or throws sandbox-violation.
    std::filesystem::path resolve(std::string_view requested) const;

    // Like resolve(), but the final component is not followed when it is a
    // symlink. For operations on the directory entry itself (delete, move).
    std::filesystem::path resolve_entry(std::string_view requested) const;

    bool contains(const std::filesystem::path& resolved) const;

    // Path relative to the root containing it, for tool output.
    std::string display(const std::filesystem::path& resolved) const;

    const std::vector<std::filesystem::path>& roots() const noexcept { return canonical_roots_; }

private:
    std::vector<std::filesystem::path> lexical_roots_;
    std::vector<std::filesystem::path> canonical_roots_;
};

bool path_within(const std::filesystem::path& path, const std::filesystem::path& root);

// Runs `work` in a forked child. The child's return value becomes the
// payload; an exception becomes status=error. The parent kills the child
// once `policy.timeout` elapses (status=timeout) or once output exceeds
// max_output_bytes (truncated).
ToolResult run_isolated(const std::function<std::string()>& work, const SandboxPolicy& policy);

// Same contract, executed on the calling thread. Used for in-memory toolsets
// whose state must survive the call; the timeout is not enforced.
ToolResult run_inline(const std::function<std::string()>& work, const SandboxPolicy& policy);

} // namespace splitcall
