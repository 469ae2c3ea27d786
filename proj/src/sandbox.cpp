#include "splitcall/sandbox.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "splitcall/error.hpp"

namespace splitcall {

namespace fs = std::filesystem;
using std::chrono::steady_clock;

bool path_within(const fs::path& path, const fs::path& root) {
    auto p = path.begin();
    for (auto r = root.begin(); r != root.end(); ++r, ++p) {
        if (r->empty()) {
            continue;  // trailing separator
        }
        if (p == path.end() || *p != *r) {
            return false;
        }
    }
    return true;
}

PathGuard::PathGuard(const std::vector<fs::path>& roots) {
    if (roots.empty()) {
        throw Error(Errc::invalid_config, "sandbox has no allowed roots");
    }
    for (const auto& root : roots) {
        std::error_code ec;
        auto absolute = fs::absolute(root, ec).lexically_normal();
        auto canonical = fs::canonical(root, ec);
        if (ec || !fs::is_directory(canonical)) {
            throw Error(Errc::invalid_config, "allowed root is not a directory: " + root.string());
        }
        lexical_roots_.push_back(absolute);
        canonical_roots_.push_back(canonical);
    }
}

bool PathGuard::contains(const fs::path& resolved) const {
    for (const auto& root : canonical_roots_) {
        if (path_within(resolved, root)) {
            return true;
        }
    }
    return false;
}

fs::path PathGuard::resolve(std::string_view requested) const {
    auto reject = [&](const std::string& why) -> Error {
        return Error(Errc::sandbox_violation,
                     "path '" + std::string(requested) + "' rejected: " + why);
    };
    if (requested.empty()) {
        throw reject("empty path");
    }
    if (requested.find('\0') != std::string_view::npos) {
        throw reject("embedded NUL");
    }
    if (requested.front() == '~') {
        throw reject("home-relative paths are outside the sandbox");
    }

    fs::path candidate(requested);
    if (candidate.is_relative()) {
        candidate = lexical_roots_.front() / candidate;
    }
    candidate = candidate.lexically_normal();

    bool lexically_inside = false;
    for (std::size_t i = 0; i < lexical_roots_.size() && !lexically_inside; ++i) {
        lexically_inside = path_within(candidate, lexical_roots_[i]) ||
                           path_within(candidate, canonical_roots_[i]);
    }
    if (!lexically_inside) {
        throw reject("outside allowed roots");
    }

    std::error_code ec;
    fs::path resolved = fs::weakly_canonical(candidate, ec);
    if (ec) {
        throw reject("cannot resolve: " + ec.message());
    }
    if (!contains(resolved)) {
        throw reject("resolves outside allowed roots");
    }
    return resolved;
}

fs::path PathGuard::resolve_entry(std::string_view requested) const {
    fs::path normal = fs::path(requested).lexically_normal();
    auto name = normal.filename();
    if (name.empty() || name == "." || name == "..") {
        return resolve(requested);
    }
    fs::path parent = normal.parent_path();
    fs::path resolved_parent = resolve(parent.empty() ? std::string(".") : parent.string());
    fs::path entry = resolved_parent / name;
    for (const auto& root : canonical_roots_) {
        if (entry == root) {
            throw Error(Errc::sandbox_violation,
                        "path '" + std::string(requested) + "' rejected: allowed root itself");
        }
    }
    return entry;
}

std::string PathGuard::display(const fs::path& resolved) const {
    for (const auto& root : canonical_roots_) {
        if (path_within(resolved, root)) {
            auto rel = resolved.lexically_relative(root);
            return rel.empty() || rel == "." ? std::string(".") : rel.generic_string();
        }
    }
    return resolved.generic_string();
}

namespace {

void write_all(int fd, const char* data, std::size_t size) {
    while (size > 0) {
        ssize_t n = ::write(fd, data, size);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            return;
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

std::chrono::milliseconds since(steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(steady_clock::now() - start);
}

} // namespace

ToolResult run_isolated(const std::function<std::string()>& work, const SandboxPolicy& policy) {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        throw Error(Errc::io_error, std::string("pipe: ") + std::strerror(errno));
    }
    const auto start = steady_clock::now();
    const auto deadline = start + policy.timeout;

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw Error(Errc::io_error, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::signal(SIGPIPE, SIG_IGN);
        ::close(fds[0]);
        char status = '0';
        std::string payload;
        try {
            payload = work();
        } catch (const std::exception& e) {
            status = '1';
            payload = e.what();
        } catch (...) {
            status = '1';
            payload = "unknown failure";
        }
        write_all(fds[1], &status, 1);
        write_all(fds[1], payload.data(), payload.size());
        ::close(fds[1]);
        ::_exit(0);
    }

    ::close(fds[1]);
    // Status byte, then at most one byte past the cap so overflow is visible.
    const std::size_t limit = policy.max_output_bytes + 2;
    std::string buffer;
    bool timed_out = false;
    bool overflow = false;
    char chunk[8192];
    while (true) {
        // Round up so the wait never ends before the deadline.
        auto remaining = std::chrono::ceil<std::chrono::milliseconds>(deadline - steady_clock::now());
        if (steady_clock::now() >= deadline) {
            timed_out = true;
            break;
        }
        pollfd pfd{fds[0], POLLIN, 0};
        int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0 && errno == EINTR) {
            continue;
        }
        if (ready == 0) {
            timed_out = true;
            break;
        }
        ssize_t n = ::read(fds[0], chunk, sizeof(chunk));
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            break;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
        if (buffer.size() >= limit) {
            overflow = true;
            break;
        }
    }
    if (timed_out || overflow) {
        ::kill(pid, SIGKILL);
    }
    int wait_status = 0;
    while (::waitpid(pid, &wait_status, 0) < 0 && errno == EINTR) {
    }
    ::close(fds[0]);

    ToolResult result;
    result.elapsed = since(start);
    if (timed_out) {
        result.status = ToolStatus::timeout;
        result.payload = "tool timed out after " + std::to_string(policy.timeout.count()) + " ms";
        return result;
    }
    if (buffer.empty()) {
        result.status = ToolStatus::error;
        result.payload = WIFSIGNALED(wait_status)
                             ? "tool process killed by signal " + std::to_string(WTERMSIG(wait_status))
                             : "tool process produced no result";
        return result;
    }
    result.status = buffer.front() == '0' ? ToolStatus::ok : ToolStatus::error;
    result.payload = buffer.substr(1);
    return cap_output(std::move(result), policy.max_output_bytes);
}

ToolResult run_inline(const std::function<std::string()>& work, const SandboxPolicy& policy) {
    const auto start = steady_clock::now();
    ToolResult result;
    try {
        result.payload = work();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        result.status = ToolStatus::error;
        result.payload = e.what();
    }
    result.elapsed = since(start);
    return cap_output(std::move(result), policy.max_output_bytes);
}

} // namespace splitcall
