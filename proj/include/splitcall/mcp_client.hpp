#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

#include "splitcall/toolhub.hpp"

namespace splitcall {

// MCP client over a child process's stdin/stdout: newline-delimited
// JSON-RPC 2.0 with initialize, tools/list and tools/call.
//
// One request is in flight per connection; calls are serialized by an
// internal mutex. A request that exceeds the policy timeout kills the server;
// the next call respawns it and repeats the handshake.
class StdioMcpToolset : public Toolset {
public:
    static constexpr const char* kProtocolVersion = "2024-11-05";

    // Spawns `command` through /bin/sh and completes the handshake.
    // Throws transport-failure when either step fails.
    StdioMcpToolset(std::string toolset_id, std::string command, SandboxPolicy policy);
    ~StdioMcpToolset() override;

    StdioMcpToolset(const StdioMcpToolset&) = delete;
    StdioMcpToolset& operator=(const StdioMcpToolset&) = delete;

    std::vector<ToolSpec> tools() override;
    ToolResult call(const ToolSpec& spec, const json& arguments, const SandboxPolicy& policy) override;
    std::string description() const override { return server_description_; }

    pid_t server_pid() const noexcept { return pid_; }

private:
    void connect(std::chrono::milliseconds timeout);
    void disconnect();
    // Sends a request and waits for the matching response. Returns the
    // "result" member; JSON-RPC errors throw transport-failure or are
    // reported through `rpc_error` when it is non-null.
    json request(const std::string& method, const json& params,
                 std::chrono::steady_clock::time_point deadline, std::string* rpc_error = nullptr);
    void send_line(const json& message);
    // Empty optional on deadline or EOF.
    std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline);

    std::string toolset_id_;
    std::string command_;
    SandboxPolicy policy_;
    std::string server_description_;

    std::mutex mutex_;
    pid_t pid_ = -1;
    int fd_ = -1;
    std::string read_buffer_;
    std::int64_t next_id_ = 1;
    bool eof_ = false;
};

} // namespace splitcall
