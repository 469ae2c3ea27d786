#include "splitcall/mcp_client.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "splitcall/error.hpp"
#include "splitcall/sandbox.hpp"

namespace splitcall {

namespace {

using Clock = std::chrono::steady_clock;

// Argument keys whose string values are treated as filesystem paths when the
// policy carries allowed roots.
bool is_path_key(const std::string& key) {
    return key == "path" || key == "paths" || key == "source" || key == "destination";
}

void confine_arguments(const json& arguments, const SandboxPolicy& policy) {
    if (policy.allowed_roots.empty() || !arguments.is_object()) {
        return;
    }
    PathGuard guard(policy.allowed_roots);
    for (const auto& [key, value] : arguments.items()) {
        if (!is_path_key(key)) {
            continue;
        }
        if (value.is_string()) {
            guard.resolve(value.get<std::string>());
        } else if (value.is_array()) {
            for (const auto& v : value) {
                if (v.is_string()) guard.resolve(v.get<std::string>());
            }
        }
    }
}

} // namespace

StdioMcpToolset::StdioMcpToolset(std::string toolset_id, std::string command, SandboxPolicy policy)
    : toolset_id_(std::move(toolset_id)), command_(std::move(command)), policy_(std::move(policy)) {
    if (command_.empty()) {
        throw Error(Errc::transport_failure, "stdio toolset " + toolset_id_ + " has no command");
    }
    std::lock_guard lock(mutex_);
    connect(policy_.timeout);
}

StdioMcpToolset::~StdioMcpToolset() {
    std::lock_guard lock(mutex_);
    disconnect();
}

void StdioMcpToolset::connect(std::chrono::milliseconds timeout) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        throw Error(Errc::transport_failure, std::string("socketpair: ") + std::strerror(errno));
    }
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw Error(Errc::transport_failure, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        int devnull = ::open("/dev/null", O_WRONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDERR_FILENO);
        }
        std::string line = "exec " + command_;
        ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    pid_ = pid;
    fd_ = sv[0];
    eof_ = false;
    read_buffer_.clear();

    const auto deadline = Clock::now() + timeout;
    try {
        std::string rpc_error;
        json result = request("initialize",
                              json{{"protocolVersion", kProtocolVersion},
                                   {"capabilities", json::object()},
                                   {"clientInfo", {{"name", "splitcall"}, {"version", "0.1.0"}}}},
                              deadline, &rpc_error);
        if (!rpc_error.empty()) {
            throw Error(Errc::transport_failure, "initialize rejected: " + rpc_error);
        }
        if (result.contains("serverInfo")) {
            server_description_ = result["serverInfo"].value("name", std::string{});
        }
        if (result.contains("instructions") && result["instructions"].is_string()) {
            server_description_ = result["instructions"].get<std::string>();
        }
        send_line(json{{"jsonrpc", "2.0"}, {"method", "notifications/initialized"}});
    } catch (const Error& e) {
        disconnect();
        throw Error(Errc::transport_failure,
                    "MCP handshake with '" + command_ + "' failed: " + e.what());
    }
}

void StdioMcpToolset::disconnect() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        // Closing the socket is the polite shutdown; give the server a moment.
        for (int i = 0; i < 20; ++i) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(5000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
}

void StdioMcpToolset::send_line(const json& message) {
    std::string line = canonical_dump(message) + "\n";
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::send(fd_, data, left, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::transport_failure, std::string("write to MCP server: ") + std::strerror(errno));
        }
        data += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::optional<std::string> StdioMcpToolset::read_line(Clock::time_point deadline) {
    while (true) {
        if (auto nl = read_buffer_.find('\n'); nl != std::string::npos) {
            std::string line = read_buffer_.substr(0, nl);
            read_buffer_.erase(0, nl + 1);
            return line;
        }
        if (eof_) {
            return std::nullopt;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (remaining.count() <= 0) {
            return std::nullopt;
        }
        pollfd pfd{fd_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0 && errno == EINTR) continue;
        if (ready <= 0) {
            return std::nullopt;
        }
        char chunk[8192];
        ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            eof_ = true;
            continue;
        }
        read_buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

json StdioMcpToolset::request(const std::string& method, const json& params,
                              Clock::time_point deadline, std::string* rpc_error) {
    const std::int64_t id = next_id_++;
    send_line(json{{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", params}});
    while (true) {
        auto line = read_line(deadline);
        if (!line) {
            if (eof_) {
                throw Error(Errc::transport_failure, "MCP server closed the connection during " + method);
            }
            throw Error(Errc::timeout, "MCP request " + method + " timed out");
        }
        json message;
        try {
            message = json::parse(*line);
        } catch (const json::parse_error&) {
            continue;  // stray log output on stdout
        }
        if (!message.is_object() || !message.contains("id") || message["id"] != id) {
            continue;  // notifications and server-initiated requests
        }
        if (message.contains("error")) {
            std::string text = message["error"].value("message", std::string("error"));
            if (rpc_error) {
                *rpc_error = text;
                return json::object();
            }
            throw Error(Errc::transport_failure, method + " failed: " + text);
        }
        return message.value("result", json::object());
    }
}

std::vector<ToolSpec> StdioMcpToolset::tools() {
    std::lock_guard lock(mutex_);
    if (fd_ < 0) {
        connect(policy_.timeout);
    }
    std::vector<ToolSpec> specs;
    json cursor;
    do {
        json params = json::object();
        if (!cursor.is_null()) params["cursor"] = cursor;
        json result = request("tools/list", params, Clock::now() + policy_.timeout);
        for (const auto& tool : result.value("tools", json::array())) {
            ToolSpec spec;
            spec.toolset_id = toolset_id_;
            spec.name = tool.at("name").get<std::string>();
            spec.description = tool.value("description", std::string{});
            spec.schema = tool.value("inputSchema", json{{"type", "object"}, {"properties", json::object()}});
            if (!spec.schema.contains("properties")) {
                spec.schema["properties"] = json::object();
            }
            specs.push_back(std::move(spec));
        }
        cursor = result.value("nextCursor", json());
    } while (cursor.is_string() && !cursor.get<std::string>().empty());
    return specs;
}

ToolResult StdioMcpToolset::call(const ToolSpec& spec, const json& arguments, const SandboxPolicy& policy) {
    confine_arguments(arguments, policy);

    std::lock_guard lock(mutex_);
    const auto start = Clock::now();
    auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    };
    if (fd_ < 0) {
        connect(policy.timeout);
    }
    ToolResult out;
    try {
        std::string rpc_error;
        json result = request("tools/call", json{{"name", spec.name}, {"arguments", arguments}},
                              start + policy.timeout, &rpc_error);
        if (!rpc_error.empty()) {
            out.status = ToolStatus::error;
            out.payload = rpc_error;
        } else {
            std::string text;
            for (const auto& item : result.value("content", json::array())) {
                if (!text.empty()) text += "\n";
                if (item.value("type", std::string{}) == "text") {
                    text += item.value("text", std::string{});
                } else {
                    text += canonical_dump(item);
                }
            }
            out.status = result.value("isError", false) ? ToolStatus::error : ToolStatus::ok;
            out.payload = std::move(text);
        }
    } catch (const Error& e) {
        // The connection state is unknown after a timeout or broken pipe.
        disconnect();
        out.status = e.code() == Errc::timeout ? ToolStatus::timeout : ToolStatus::error;
        out.payload = e.what();
    }
    out.elapsed = elapsed();
    return out;
}

} // namespace splitcall
