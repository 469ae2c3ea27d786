#include "doctest.h"
#include "support.hpp"

#include "splitcall/mcp_client.hpp"

using namespace splitcall;
using test::error_code_of;

#ifndef MOCK_MCP_SERVER
#error "MOCK_MCP_SERVER must point at the mock server binary"
#endif

namespace {

ToolsetConfig mock_config(const std::string& extra = "") {
    ToolsetConfig c;
    c.toolset_id = "mock";
    c.transport = Transport::stdio_subprocess;
    c.command = std::string(MOCK_MCP_SERVER) + extra;
    c.sandbox.timeout = std::chrono::milliseconds(2000);
    return c;
}

} // namespace

TEST_CASE("handshake and paginated tools/list") {
    ToolHub hub;
    hub.register_toolset(mock_config());
    auto tools = hub.list_tools("mock");
    REQUIRE(tools.size() == 5);
    CHECK(tools[0].name == "boom");
    CHECK(tools[4].name == "sleep");
    CHECK(hub.catalog().toolsets.at("mock").description == "mock-server");
}

TEST_CASE("tools/call results") {
    ToolHub hub;
    hub.register_toolset(mock_config());
    CHECK(hub.invoke("mock", "echo", {{"text", "hi"}}).payload == "hi");
    auto boom = hub.invoke("mock", "boom", json::object());
    CHECK(boom.status == ToolStatus::error);
    CHECK(boom.payload == "it broke");
    CHECK(error_code_of([&] { hub.invoke("mock", "echo", json::object()); }) == Errc::invalid_arguments);
}

TEST_CASE("timeout kills the server and the next call reconnects") {
    auto config = mock_config();
    config.sandbox.timeout = std::chrono::milliseconds(100);
    ToolHub hub;
    hub.register_toolset(config);
    ToolResult slow;
    auto ms = test::elapsed_ms([&] { slow = hub.invoke("mock", "sleep", {{"ms", 3000}}); });
    CHECK(slow.status == ToolStatus::timeout);
    CHECK(ms < 1000);
    CHECK(hub.invoke("mock", "echo", {{"text", "back"}}).payload == "back");
}

TEST_CASE("server crash becomes an error result, then recovers") {
    ToolHub hub;
    hub.register_toolset(mock_config());
    CHECK(hub.invoke("mock", "crash", json::object()).status == ToolStatus::error);
    CHECK(hub.invoke("mock", "echo", {{"text", "again"}}).payload == "again");
}

TEST_CASE("failed handshake is a transport failure") {
    ToolHub hub;
    CHECK(error_code_of([&] { hub.register_toolset(mock_config(" --no-init")); }) == Errc::transport_failure);
}

TEST_CASE("path arguments are confined when roots are configured") {
    test::TempDir dir;
    auto config = mock_config();
    config.sandbox.allowed_roots = {dir.path()};
    ToolHub hub;
    hub.register_toolset(config);
    CHECK(hub.invoke("mock", "read", {{"path", "inside.txt"}}).payload.find("read:") == 0);
    CHECK(error_code_of([&] { hub.invoke("mock", "read", {{"path", "/etc/passwd"}}); }) == Errc::sandbox_violation);
    CHECK(error_code_of([&] { hub.invoke("mock", "read", {{"path", "../x"}}); }) == Errc::sandbox_violation);
}
