// Minimal stdio MCP server for client tests.
//   mock_mcp_server            normal
//   mock_mcp_server --no-init  exits before answering initialize
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"

using json = nlohmann::json;

namespace {

json tool(const std::string& name, const std::string& description, json props, json required) {
    return {{"name", name},
            {"description", description},
            {"inputSchema", {{"type", "object"}, {"properties", props}, {"required", required}}}};
}

void reply(const json& id, const json& result) {
    std::cout << json{{"jsonrpc", "2.0"}, {"id", id}, {"result", result}}.dump() << "\n" << std::flush;
}

void reply_error(const json& id, int code, const std::string& message) {
    std::cout << json{{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}}.dump()
              << "\n"
              << std::flush;
}

json text(const std::string& s) { return {{"content", json::array({{{"type", "text"}, {"text", s}}})}}; }

} // namespace

int main(int argc, char** argv) {
    const bool no_init = argc > 1 && std::string(argv[1]) == "--no-init";
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        json msg = json::parse(line, nullptr, false);
        if (msg.is_discarded() || !msg.contains("id")) continue;  // notifications
        const json id = msg["id"];
        const std::string method = msg.value("method", "");
        if (method == "initialize") {
            if (no_init) return 3;
            // unsolicited notification first; clients must skip it
            std::cout << R"({"jsonrpc":"2.0","method":"notifications/message","params":{}})" << "\n";
            reply(id, {{"protocolVersion", "2024-11-05"},
                       {"capabilities", {{"tools", json::object()}}},
                       {"serverInfo", {{"name", "mock-server"}, {"version", "1"}}}});
        } else if (method == "tools/list") {
            // two pages to exercise cursors
            const auto params = msg.value("params", json::object());
            if (!params.contains("cursor")) {
                reply(id, {{"tools", json::array({tool("echo", "Echo text back.", {{"text", {{"type", "string"}}}},
                                                       json::array({"text"})),
                                                  tool("read", "Read a path.", {{"path", {{"type", "string"}}}},
                                                       json::array({"path"}))})},
                           {"nextCursor", "page2"}});
            } else {
                reply(id, {{"tools", json::array({tool("sleep", "Sleep ms.", {{"ms", {{"type", "integer"}}}},
                                                       json::array({"ms"})),
                                                  tool("boom", "Always fails.", json::object(), json::array()),
                                                  tool("crash", "Exits the server.", json::object(),
                                                       json::array())})}});
            }
        } else if (method == "tools/call") {
            const auto name = msg["params"].value("name", "");
            const auto args = msg["params"].value("arguments", json::object());
            if (name == "echo") {
                reply(id, text(args.value("text", "")));
            } else if (name == "read") {
                reply(id, text("read:" + args.value("path", "")));
            } else if (name == "sleep") {
                std::this_thread::sleep_for(std::chrono::milliseconds(args.value("ms", 0)));
                reply(id, text("slept"));
            } else if (name == "boom") {
                auto r = text("it broke");
                r["isError"] = true;
                reply(id, r);
            } else if (name == "crash") {
                return 1;
            } else {
                reply_error(id, -32602, "unknown tool " + name);
            }
        } else {
            reply_error(id, -32601, "method not found");
        }
    }
    return 0;
}
