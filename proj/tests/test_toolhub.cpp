#include "doctest.h"
#include "support.hpp"

#include <thread>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/sandbox.hpp"
#include "splitcall/schema.hpp"

using namespace splitcall;
using test::error_code_of;

namespace {

ToolsetConfig fs_config(const std::filesystem::path& root, const char* id = "filesystem") {
    ToolsetConfig c;
    c.toolset_id = id;
    c.command = "filesystem";
    c.sandbox.allowed_roots = {root};
    c.sandbox.timeout = std::chrono::milliseconds(5000);
    return c;
}

} // namespace

TEST_CASE("schema validation") {
    const json schema = {{"type", "object"},
                         {"properties",
                          {{"path", {{"type", "string"}}},
                           {"n", {{"type", "integer"}, {"minimum", 1}, {"maximum", 3}}},
                           {"mode", {{"enum", {"a", "b"}}}},
                           {"tags", {{"type", "array"}, {"items", {{"type", "string"}}}, {"minItems", 1}}}}},
                         {"required", {"path"}},
                         {"additionalProperties", false}};

    CHECK(schema::validate(schema, {{"path", "a.txt"}}).empty());
    CHECK(schema::validate(schema, json::object()) == std::vector<std::string>{"missing required: path"});
    CHECK_FALSE(schema::validate(schema, {{"path", 3}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"n", 0}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"n", 4}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"n", 1.5}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"mode", "c"}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"tags", json::array()}}).empty());
    CHECK_FALSE(schema::validate(schema, {{"path", "x"}, {"tags", {1}}}).empty());
    CHECK(schema::validate(schema, {{"path", "x"}, {"extra", 1}}).front().find("unknown key") == 0);
    CHECK_FALSE(schema::validate(schema, json::array()).empty());

    CHECK(schema::check_tool_schema(schema).empty());
    CHECK_FALSE(schema::check_tool_schema({{"type", "object"}}).empty());
    CHECK_FALSE(schema::check_tool_schema(
                    {{"type", "object"}, {"properties", json::object()}, {"required", {"ghost"}}})
                    .empty());
}

TEST_CASE("builtin filesystem registers 12 sorted tools") {
    test::TempDir dir;
    ToolHub hub;
    auto handle = hub.register_toolset(fs_config(dir.path()));
    auto tools = handle.list_tools();
    REQUIRE(tools.size() == 12);
    CHECK(std::is_sorted(tools.begin(), tools.end(),
                         [](const ToolSpec& a, const ToolSpec& b) { return a.name < b.name; }));
    std::set<std::string> names;
    for (const auto& t : tools) {
        names.insert(t.name);
        CHECK(t.toolset_id == "filesystem");
        CHECK(schema::check_tool_schema(t.schema).empty());
    }
    for (const char* n : {"read_file", "list_directory", "get_file_info"}) CHECK(names.count(n));
    // idempotent and order-stable
    CHECK(hub.list_tools("filesystem") == tools);
    CHECK(hub.list_tools("filesystem") == tools);
}

TEST_CASE("registration errors") {
    test::TempDir dir;
    ToolHub hub;
    hub.register_toolset(fs_config(dir.path()));
    CHECK(error_code_of([&] { hub.register_toolset(fs_config(dir.path())); }) == Errc::duplicate_id);
    CHECK(error_code_of([&] { hub.list_tools("nope"); }) == Errc::unknown_toolset);
    CHECK(error_code_of([&] { hub.invoke("filesystem", "nope", json::object()); }) == Errc::unknown_tool);

    ToolsetConfig stdio;
    stdio.toolset_id = "ghost";
    stdio.transport = Transport::stdio_subprocess;
    stdio.command = "/nonexistent/definitely-not-a-server";
    CHECK(error_code_of([&] { hub.register_toolset(stdio); }) == Errc::transport_failure);

    ToolsetConfig no_roots;
    no_roots.toolset_id = "fs2";
    no_roots.command = "filesystem";
    CHECK(error_code_of([&] { hub.register_toolset(no_roots); }) == Errc::invalid_config);

    ToolsetConfig empty;
    empty.toolset_id = "empty";
    hub.register_toolset(empty);
    CHECK(hub.list_tools("empty").empty());
}

TEST_CASE("validate_arguments examples") {
    test::TempDir dir;
    ToolHub hub;
    hub.register_toolset(fs_config(dir.path()));
    const auto& read = hub.spec("filesystem", "read_file");
    CHECK(validate_arguments(read, {{"path", "a.txt"}}).ok());
    auto bad = validate_arguments(read, json::object());
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.violations.front() == "missing required: path");
    CHECK(validate_arguments(hub.spec("filesystem", "list_directory"), {{"path", "."}, {"sortBy", "size"}}).ok());
    CHECK_FALSE(validate_arguments(read, json::array()).ok());
    CHECK(error_code_of([&] { hub.invoke("filesystem", "read_file", json::object()); }) == Errc::invalid_arguments);
}

TEST_CASE("filesystem tools") {
    test::TempDir dir;
    dir.write("a.txt", "one\ntwo\nthree\nfour\n");
    dir.write("sub/b.md", "bee");
    dir.write("sub/deeper/c.txt", "sea");
    ToolHub hub;
    hub.register_toolset(fs_config(dir.path()));
    auto call = [&](const char* tool, const json& args) { return hub.invoke("filesystem", tool, args); };

    auto r = call("read_file", {{"path", "a.txt"}});
    CHECK(r.status == ToolStatus::ok);
    CHECK(r.payload == "one\ntwo\nthree\nfour\n");
    CHECK(call("read_file", {{"path", "a.txt"}, {"head", 2}}).payload == "one\ntwo");
    CHECK(call("read_file", {{"path", "a.txt"}, {"tail", 1}}).payload == "four");
    CHECK(call("read_file", {{"path", "a.txt"}, {"head", 1}, {"tail", 1}}).status == ToolStatus::error);
    CHECK(call("read_file", {{"path", "missing.txt"}}).status == ToolStatus::error);
    CHECK(call("read_file", {{"path", (dir.path() / "sub/b.md").string()}}).payload == "bee");

    auto listing = call("list_directory", {{"path", "."}}).payload;
    CHECK(listing.find("[FILE] a.txt (19 bytes)") != std::string::npos);
    CHECK(listing.find("[DIR] sub") != std::string::npos);
    auto by_size = call("list_directory", {{"path", "."}, {"sortBy", "size"}}).payload;
    CHECK(by_size.find("a.txt") != std::string::npos);

    auto tree = json::parse(call("directory_tree", {{"path", "sub"}}).payload);
    CHECK(tree.is_array());
    CHECK(tree.dump().find("c.txt") != std::string::npos);

    auto info = call("get_file_info", {{"path", "sub/b.md"}}).payload;
    CHECK(info.find("size: 3\n") != std::string::npos);
    CHECK(info.find("isFile: true\n") != std::string::npos);
    CHECK(info.find("permissions: ") != std::string::npos);

    CHECK(call("write_file", {{"path", "new/n.txt"}, {"content", "hi"}}).status == ToolStatus::error);
    CHECK(call("create_directory", {{"path", "new"}}).status == ToolStatus::ok);
    CHECK(call("write_file", {{"path", "new/n.txt"}, {"content", "hi"}}).status == ToolStatus::ok);
    CHECK(call("read_file", {{"path", "new/n.txt"}}).payload == "hi");
    CHECK(call("edit_file", {{"path", "new/n.txt"}, {"edits", {{{"oldText", "hi"}, {"newText", "ho"}}}}}).status ==
          ToolStatus::ok);
    CHECK(call("read_file", {{"path", "new/n.txt"}}).payload == "ho");
    CHECK(call("edit_file", {{"path", "new/n.txt"}, {"edits", {{{"oldText", "zz"}, {"newText", "y"}}}}}).status ==
          ToolStatus::error);
    CHECK(call("move_file", {{"source", "new/n.txt"}, {"destination", "new/m.txt"}}).status == ToolStatus::ok);
    CHECK(std::filesystem::exists(dir / "new/m.txt"));
    CHECK(call("search_files", {{"path", "."}, {"pattern", "c.txt"}}).payload == "sub/deeper/c.txt\n");
    CHECK(call("search_files", {{"path", "."}, {"pattern", "zzz"}}).payload == "No matches found");
    auto multi = call("read_multiple_files", {{"paths", {"a.txt", "sub/b.md"}}}).payload;
    CHECK(multi.find("sub/b.md:\nbee") != std::string::npos);
    CHECK(call("delete_file", {{"path", "new/m.txt"}}).status == ToolStatus::ok);
    CHECK_FALSE(std::filesystem::exists(dir / "new/m.txt"));
    CHECK(call("list_allowed_directories", json::object()).payload.find(dir.path().string()) != std::string::npos);
}

TEST_CASE("sandbox confinement") {
    test::TempDir outer;
    outer.write("root/inside.txt", "ok");
    outer.write("secret.txt", "no");
    std::filesystem::create_symlink(outer / "secret.txt", outer / "root/link.txt");
    std::filesystem::create_directory_symlink(outer.path(), outer / "root/up");
    ToolHub hub;
    hub.register_toolset(fs_config(outer / "root"));
    auto code = [&](const char* tool, const json& args) {
        return error_code_of([&] { hub.invoke("filesystem", tool, args); });
    };
    CHECK(code("read_file", {{"path", "/etc/passwd"}}) == Errc::sandbox_violation);
    CHECK(code("read_file", {{"path", "../secret.txt"}}) == Errc::sandbox_violation);
    CHECK(code("read_file", {{"path", "link.txt"}}) == Errc::sandbox_violation);
    CHECK(code("read_file", {{"path", "up/secret.txt"}}) == Errc::sandbox_violation);
    CHECK(code("read_file", {{"path", "~/x"}}) == Errc::sandbox_violation);
    CHECK(code("write_file", {{"path", "../evil.txt"}, {"content", "x"}}) == Errc::sandbox_violation);
    CHECK(code("move_file", {{"source", "inside.txt"}, {"destination", "../moved.txt"}}) == Errc::sandbox_violation);
    CHECK(code("read_multiple_files", {{"paths", {"inside.txt", "../secret.txt"}}}) == Errc::sandbox_violation);
    CHECK_FALSE(std::filesystem::exists(outer / "evil.txt"));
    CHECK(std::filesystem::exists(outer / "root/inside.txt"));
    // a sibling whose name shares the root's prefix is still outside
    outer.write("root2/x.txt", "no");
    CHECK(code("read_file", {{"path", (outer / "root2/x.txt").string()}}) == Errc::sandbox_violation);
    // deleting the link removes the link, not its target
    CHECK(hub.invoke("filesystem", "delete_file", {{"path", "link.txt"}}).status == ToolStatus::ok);
    CHECK(std::filesystem::exists(outer / "secret.txt"));
}

TEST_CASE("PathGuard") {
    test::TempDir dir;
    dir.write("r/a.txt", "a");
    PathGuard guard({dir / "r"});
    CHECK(guard.resolve("a.txt") == dir / "r/a.txt");
    CHECK(guard.resolve("./x/../a.txt") == dir / "r/a.txt");
    CHECK(guard.resolve("not/yet/there.txt") == dir / "r/not/yet/there.txt");
    CHECK(guard.display(dir / "r/a.txt") == "a.txt");
    CHECK(error_code_of([&] { guard.resolve("../r2"); }) == Errc::sandbox_violation);
    CHECK(path_within(dir / "r/a", dir / "r"));
    CHECK_FALSE(path_within(dir / "r2", dir / "r"));
}

TEST_CASE("output cap and truncation marker") {
    ToolResult r{ToolStatus::ok, std::string(100, 'x'), false, {}};
    auto capped = cap_output(r, 40);
    CHECK(capped.truncated);
    CHECK(capped.payload.size() == 40);
    CHECK(capped.payload.substr(40 - kTruncationMarker.size()) == kTruncationMarker);
    auto untouched = cap_output(r, 100);
    CHECK_FALSE(untouched.truncated);
    CHECK(untouched.payload.size() == 100);
    // limits below the marker length, and multi-byte characters at the cut
    auto tiny = cap_output(r, 4);
    CHECK(tiny.truncated);
    CHECK(tiny.payload == kTruncationMarker.substr(0, 4));
    CHECK(cap_output(r, 0).payload.empty());
    ToolResult wide{ToolStatus::ok, "ab☃☃☃☃☃☃☃☃☃☃", false, {}};
    auto cut = cap_output(wide, 16);  // 16 - 11 = 5 bytes: "ab" + one snowman
    CHECK(cut.payload == "ab☃" + std::string(kTruncationMarker));

    test::TempDir dir;
    ToolHub hub;
    ToolsetConfig debug;
    debug.toolset_id = "debug";
    debug.sandbox.max_output_bytes = 64;
    hub.register_toolset(debug);
    auto big = hub.invoke("debug", "emit", {{"bytes", 100000}});
    CHECK(big.truncated);
    CHECK(big.payload.size() <= 64);
    CHECK(hub.invoke("debug", "emit", {{"bytes", 10}}).payload == std::string(10, 'x'));
}

TEST_CASE("isolated execution: timeout, failure, echo") {
    ToolHub hub;
    ToolsetConfig debug;
    debug.toolset_id = "debug";
    debug.sandbox.timeout = std::chrono::milliseconds(100);
    hub.register_toolset(debug);

    ToolResult r;
    auto ms = test::elapsed_ms([&] { r = hub.invoke("debug", "sleep", {{"forever", true}}); });
    CHECK(r.status == ToolStatus::timeout);
    CHECK(ms >= 100);
    CHECK(ms < 500);

    auto failed = hub.invoke("debug", "fail", {{"message", "kaput"}});
    CHECK(failed.status == ToolStatus::error);
    CHECK(failed.payload.find("kaput") != std::string::npos);
    CHECK(hub.invoke("debug", "echo", {{"text", "héllo"}}).payload == "héllo");
    CHECK(hub.invoke("debug", "sleep", {{"ms", 5}}).status == ToolStatus::ok);
}

TEST_CASE("per-call policy override") {
    ToolHub hub;
    ToolsetConfig debug;
    debug.toolset_id = "debug";
    hub.register_toolset(debug);
    SandboxPolicy tight;
    tight.timeout = std::chrono::milliseconds(50);
    CHECK(hub.invoke("debug", "sleep", {{"ms", 2000}}, tight).status == ToolStatus::timeout);
}

TEST_CASE("service toolsets keep state across calls") {
    ToolHub hub;
    for (const char* id : {"notion", "monday"}) {
        ToolsetConfig c;
        c.toolset_id = id;
        hub.register_toolset(c);
    }
    CHECK(hub.list_tools("notion").size() == 9);
    CHECK(hub.list_tools("monday").size() == 9);
    auto created = hub.invoke("notion", "create_page", {{"title", "Scratch"}});
    REQUIRE(created.status == ToolStatus::ok);
    auto search = hub.invoke("notion", "search_pages", {{"query", "Scratch"}});
    CHECK(search.payload.find("Scratch") != std::string::npos);
    CHECK(hub.invoke("notion", "get_page", {{"page_id", "missing"}}).status == ToolStatus::error);
    auto boards = hub.invoke("monday", "list_boards", json::object());
    CHECK(boards.status == ToolStatus::ok);
}

TEST_CASE("concurrent invocations") {
    test::TempDir dir;
    dir.write("a.txt", "alpha");
    ToolHub hub;
    hub.register_toolset(fs_config(dir.path()));
    std::atomic<int> ok{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            for (int k = 0; k < 5; ++k) {
                if (hub.invoke("filesystem", "read_file", {{"path", "a.txt"}}).payload == "alpha") ++ok;
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 40);
}

TEST_CASE("ToolResult and ToolSpec JSON round-trip") {
    ToolResult r{ToolStatus::timeout, "p", true, std::chrono::milliseconds(12)};
    CHECK(tool_result_from_json(to_json(r)) == r);
    CHECK(to_json(r)["elapsed_ms"] == 12);
    ToolSpec s{"fs", "t", "d", {{"type", "object"}, {"properties", json::object()}}};
    CHECK(tool_spec_from_json(to_json(s)) == s);
    CHECK(error_code_of([] { tool_status_from_string("weird"); }) == Errc::parse_error);
}
