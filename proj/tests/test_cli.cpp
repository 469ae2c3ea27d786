#include "doctest.h"
#include "support.hpp"

#include <sstream>

#include "splitcall/bench.hpp"
#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/cli.hpp"
#include "splitcall/config.hpp"
#include "splitcall/dataset.hpp"
#include "splitcall/judge.hpp"
#include "splitcall/json_util.hpp"
#include "splitcall/trajectory.hpp"

using namespace splitcall;
using test::error_code_of;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SPLITCALL_SOURCE_DIR;

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void check_help_golden(const std::string& name, const std::string& actual) {
    auto path = kSource / "tests/golden" / name;
    if (std::getenv("UPDATE_GOLDEN")) write_file_atomic(path, actual);
    CHECK(read_text_file(path) == actual);
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

const EnvLookup no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };

std::string script_line(const std::string& adapter, const std::string& reply) {
    return json{{"adapter", adapter}, {"reply", reply}}.dump() + "\n";
}

} // namespace

TEST_CASE("config parsing") {
    const std::string text = R"(
backend = "mock:scripts/run.jsonl"
adapter_manifest = "adapters/manifest.json"

[adapters]
plan = "single"
cache_capacity = 3

[session]
max_steps = 7
hierarchical = false
retry_on_invalid_args = 2

[[toolsets]]
id = "filesystem"
allowed_roots = ["ws", "/abs/elsewhere"]
timeout_ms = 250
max_output_bytes = 4096

[[toolsets]]
id = "notion"
)";
    auto c = parse_config(text, "/base", no_env);
    CHECK(c.backend.url == "mock:/base/scripts/run.jsonl");
    CHECK(c.backend.is_mock());
    CHECK(c.adapter_manifest == fs::path("/base/adapters/manifest.json"));
    CHECK(c.plan == AdapterPlan::single);
    CHECK(c.adapter_cache_capacity == 3u);
    CHECK(c.session.max_steps == 7u);
    CHECK_FALSE(c.session.hierarchical);
    CHECK(c.session.retry_on_invalid_args == 2u);
    REQUIRE(c.toolsets.size() == 2);
    CHECK(c.toolsets[0].sandbox.allowed_roots == std::vector<fs::path>{"/base/ws", "/abs/elsewhere"});
    CHECK(c.toolsets[0].sandbox.timeout == std::chrono::milliseconds(250));
    CHECK(c.toolsets[0].sandbox.max_output_bytes == 4096u);
    CHECK(c.toolsets[1].toolset_id == "notion");

    SUBCASE("environment wins over the file") {
        auto e = parse_config(text, "/base",
                              env_of({{"ORCH_BACKEND", "http://127.0.0.1:9000/v1"},
                                      {"ORCH_ADAPTER_PLAN", "base_only"},
                                      {"ORCH_SESSION_MAX_STEPS", "3"},
                                      {"ORCH_SESSION_HIERARCHICAL", "yes"},
                                      {"ORCH_BACKEND_MODEL", "m"}}));
        CHECK(e.backend.url == "http://127.0.0.1:9000/v1");
        CHECK(e.plan == AdapterPlan::base_only);
        CHECK(e.session.max_steps == 3u);
        CHECK(e.session.hierarchical);
        CHECK(e.backend.model == std::optional<std::string>("m"));
    }
    SUBCASE("bad environment values") {
        CHECK(error_code_of([&] { parse_config(text, "/base", env_of({{"ORCH_SESSION_MAX_STEPS", "ten"}})); }) ==
              Errc::invalid_config);
        CHECK(error_code_of([&] { parse_config(text, "/base", env_of({{"ORCH_SESSION_HIERARCHICAL", "maybe"}})); }) ==
              Errc::invalid_config);
    }
}

TEST_CASE("config table form of backend") {
    auto c = parse_config(R"(
[backend]
url = "http://localhost:8000/v1"
api_key = "k"
model = "base-model"
structured_output = "response-format"
timeout_ms = 1500
[[toolsets]]
id = "monday"
)",
                          "/x", no_env);
    CHECK(c.backend.url == "http://localhost:8000/v1");
    CHECK(c.backend.api_key == "k");
    CHECK(c.backend.structured_output == StructuredOutput::response_format);
    CHECK(c.backend.timeout == std::chrono::milliseconds(1500));
    CHECK(c.plan == AdapterPlan::decoupled);
}

TEST_CASE("config errors") {
    const std::string ok_toolset = "\n[[toolsets]]\nid = \"notion\"\n";
    CHECK(error_code_of([&] { parse_config("backend = \"mock:x\"\n", "/", no_env); }) == Errc::invalid_config);
    CHECK(error_code_of([&] { parse_config(ok_toolset, "/", no_env); }) == Errc::invalid_config);
    CHECK(error_code_of([&] { parse_config("backend = \"mock:x\"" + ok_toolset + ok_toolset, "/", no_env); }) ==
          Errc::invalid_config);
    CHECK(error_code_of([&] {
              parse_config("backend = \"mock:x\"\n[adapters]\ncache_capacity = 0" + ok_toolset, "/", no_env);
          }) == Errc::invalid_config);
    CHECK(error_code_of([&] {
              parse_config("backend = \"mock:x\"\n[session]\nmax_steps = 0" + ok_toolset, "/", no_env);
          }) == Errc::invalid_config);
    CHECK(error_code_of([&] { parse_config("backend = = 1", "/", no_env); }) == Errc::parse_error);
    CHECK(error_code_of([&] { parse_config("backend = \"mock:x\"\n[[toolsets]]\nname = \"a\"\n", "/", no_env); }) ==
          Errc::invalid_config);
    CHECK(error_code_of([&] { load_config("/definitely/not/here.toml", no_env); }) == Errc::io_error);
}

TEST_CASE("demo config loads and resolves paths") {
    auto c = load_config(kSource / "demo/config.toml", no_env);
    CHECK(c.backend.url == "mock:" + (kSource / "demo/run_script.jsonl").lexically_normal().string());
    REQUIRE(c.toolsets.size() == 3);
    CHECK(c.toolsets[0].sandbox.allowed_roots[0] == (kSource / "demo/workspace").lexically_normal());
    ToolHub hub;
    register_toolsets(hub, c);
    auto catalog = hub.catalog();
    std::size_t tools = 0;
    for (const auto& [id, entry] : catalog.toolsets) tools += entry.tools.size();
    CHECK(tools == 30);
    CHECK(catalog.all_tool_names().size() == 29);  // list_users appears twice
}

TEST_CASE("cli usage") {
    for (const auto& [name, args] : std::vector<std::pair<std::string, std::vector<std::string>>>{
             {"help_top.txt", {"--help"}},
             {"help_run.txt", {"run", "--help"}},
             {"help_gen_data.txt", {"gen-data", "--help"}},
             {"help_extract.txt", {"extract", "--help"}},
             {"help_judge.txt", {"judge", "--help"}},
             {"help_bench.txt", {"bench", "--help"}},
             {"help_serve_manifest.txt", {"serve-manifest", "--help"}}}) {
        CAPTURE(name);
        auto r = cli(args);
        CHECK(r.code == 0);
        check_help_golden(name, r.out);
    }
    auto none = cli({});
    CHECK(none.code == 2);
    auto unknown = cli({"frobnicate"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.rfind("error: ", 0) == 0);
    auto missing = cli({"run", "--query", "x"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--config") != std::string::npos);
    CHECK(cli({"serve-manifest"}).code == 2);
    CHECK(cli({"bench", "--suite", "s", "--jobs", "0"}).code == 2);
}

TEST_CASE("cli domain errors are one JSON line") {
    auto r = cli({"run", "--query", "hello", "--config", "/nonexistent/config.toml"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    auto j = json::parse(r.err);
    CHECK(j["error"] == "io-error");
    CHECK(j["message"].is_string());
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("cli run on the demo config") {
    test::TempDir dir;
    auto trace = (dir / "trace.jsonl").string();
    auto r = cli({"run", "--config", (kSource / "demo/config.toml").string(), "--query",
                  "what's in my notes folder and what's on the shopping list?", "--trace", trace});
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["steps"] == 2);
    CHECK(j["terminated_by"] == "summarize");
    CHECK(j["summary"].get<std::string>().find("milk") != std::string::npos);
    auto t = read_trace(trace);
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[1].result.payload.find("milk") != std::string::npos);
    for (const auto& s : t.steps) CHECK(s.model_calls == 3u);

    // script runs out: session error maps to exit 1
    auto flat = cli({"run", "--config", (kSource / "demo/config.toml").string(), "--query", "x", "--flat", "--trace",
                     (dir / "flat.jsonl").string()});
    CHECK(flat.code == 1);
    CHECK(json::parse(flat.err)["error"].is_string());
}

TEST_CASE("cli judge") {
    test::TempDir dir;
    GroundTruth g;
    g.fs_status = {{"notes", true, 0, "2024-01-01T00:00:00Z", "755", std::nullopt},
                   {"notes/a.txt", false, 3, "2024-01-01T00:00:00Z", "644", "abc"}};
    g.requirements = {{"r1", RequirementKind::content, "notes/a.txt", "", {}, {"read_file"}},
                      {"r2", RequirementKind::listing, "notes/a.txt", "", {}, {"list_directory"}}};
    dir.write("truth.json", to_json(g).dump());
    Trajectory t;
    Step s;
    s.toolset_id = "filesystem";
    s.tool = "read_file";
    s.arguments = {{"path", "notes/a.txt"}};
    s.result = {ToolStatus::ok, "abc", false, {}};
    t.steps = {s};
    t.terminated_by = Termination::summarize;
    write_trace(dir / "trace.jsonl", t);

    auto r = cli({"judge", "--trace", (dir / "trace.jsonl").string(), "--truth", (dir / "truth.json").string()});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["score"] == 5);
    CHECK(j["satisfied"] == 1);
    CHECK(j["total"] == 2);

    dir.write("judge.jsonl", script_line("base", R"({"Reasoning_ToolCoverage":"half","Score_ToolCoverage":5})"));
    auto llm = cli({"judge", "--trace", (dir / "trace.jsonl").string(), "--truth", (dir / "truth.json").string(),
                    "--llm", "--backend", "mock:" + (dir / "judge.jsonl").string()});
    REQUIRE(llm.code == 0);
    CHECK(json::parse(llm.out)["score"] == 5);
    CHECK(json::parse(llm.out)["reasoning"] == "half");

    dir.write("instructions.txt", "custom instructions");
    auto custom = cli({"judge", "--trace", (dir / "trace.jsonl").string(), "--truth", (dir / "truth.json").string(),
                       "--llm", "--backend", "mock:" + (dir / "judge.jsonl").string(), "--prompt-file",
                       (dir / "instructions.txt").string()});
    CHECK(custom.code == 0);

    auto no_backend =
        cli({"judge", "--trace", (dir / "trace.jsonl").string(), "--truth", (dir / "truth.json").string(), "--llm"});
    CHECK(no_backend.code == 1);
}

TEST_CASE("cli gen-data then extract") {
    test::TempDir dir;
    dir.write("ws/readme.txt", "hello");
    std::string script;
    const auto fs_tools = make_builtin_toolset("filesystem")->tools();
    REQUIRE(fs_tools.size() == 12);
    for (std::size_t i = 0; i < fs_tools.size(); ++i) {
        if (i == 0) script += script_line("base", "Open C:\\temp\\x.txt");  // rejected by lint, retried
        script += script_line("base", "please take care of item " + std::to_string(i) + " in my workspace");
    }
    for (std::size_t i = 0; i < fs_tools.size(); ++i) {
        script += script_line("base", "list_directory");
        script += script_line("base", R"({"path":"."})");
        script += script_line("base", "summarize");
        script += script_line("base", "done " + std::to_string(i));
    }
    dir.write("gen.jsonl", script);
    dir.write("gen.toml", "backend = \"mock:gen.jsonl\"\n[session]\nmax_steps = 5\n"
                          "[[toolsets]]\nid = \"filesystem\"\nallowed_roots = [\"ws\"]\n");

    auto gen = cli({"gen-data", "--config", (dir / "gen.toml").string(), "--toolset", "filesystem", "--per-tool",
                    "1", "--out", (dir / "data").string(), "--capture"});
    INFO(gen.err);
    REQUIRE(gen.code == 0);
    auto summary = json::parse(gen.out);
    CHECK(summary["queries"] == 12);
    CHECK(summary["trajectories"] == 12);
    CHECK(summary["flagged"] == 0);
    auto queries = read_jsonl(dir / "data/queries.jsonl");
    REQUIRE(queries.size() == 12);
    CHECK(queries[0]["text"] == "please take care of item 0 in my workspace");
    CHECK(fs::exists(dir / "data/catalog.json"));
    CHECK(json::parse(read_text_file(dir / "data/lint.json"))["over_20_steps"].empty());
    auto captured = read_trace_directory(dir / "data/trajectories");
    REQUIRE(captured.size() == 12);
    for (const auto& t : captured) {
        CHECK_FALSE(t.query_tool.empty());
        CHECK(t.terminated_by == Termination::summarize);
    }

    auto ext = cli({"extract", "--trajectories", (dir / "data/trajectories").string(), "--out",
                    (dir / "out").string(), "--catalog", (dir / "data/catalog.json").string(), "--test", "6",
                    "--split", "0.5", "--seed", "42"});
    INFO(ext.err);
    REQUIRE(ext.code == 0);
    auto e = json::parse(ext.out);
    CHECK(e["test_queries"] == 6);
    CHECK(e["train_trajectories"] == 3);
    CHECK(e["validation_trajectories"] == 3);
    auto train = read_jsonl(dir / "out/train.jsonl");
    CHECK(train.size() == e["train_instances"].get<std::size_t>());
    CHECK(read_jsonl(dir / "out/test_queries.jsonl").size() == 6);
    for (const auto& line : train) {
        auto inst = training_instance_from_json(line);
        CHECK(check_mask_spans(inst).empty());
    }
    auto split = json::parse(read_text_file(dir / "out/split.json"));
    CHECK(split["seed"] == 42);

    // reserved queries never reach the training files
    std::set<std::string> reserved;
    for (const auto& q : read_jsonl(dir / "out/test_queries.jsonl")) reserved.insert(q["id"]);
    for (const auto& id : split["train_trajectories"]) CHECK_FALSE(reserved.count(id));
    for (const auto& id : split["validation_trajectories"]) CHECK_FALSE(reserved.count(id));

    auto no_catalog = cli({"extract", "--trajectories", (dir / "data/trajectories").string(), "--out",
                           (dir / "out2").string()});
    CHECK(no_catalog.code == 1);
    CHECK(json::parse(no_catalog.err)["error"] == "invalid-config");
}

TEST_CASE("cli serve-manifest") {
    test::TempDir dir;
    fs::create_directories(dir / "adapters/sel:filesystem");
    fs::create_directories(dir / "adapters/arg:filesystem:read_file");
    fs::create_directories(dir / "adapters/not an adapter");
    auto r = cli({"serve-manifest", "--adapters", (dir / "adapters").string(), "--out",
                  (dir / "manifest.json").string()});
    REQUIRE(r.code == 0);
    auto m = load_manifest(dir / "manifest.json");
    REQUIRE(m.size() == 2);
    CHECK(json::parse(r.out).size() == 2);
    auto again = cli({"serve-manifest", "--manifest", (dir / "manifest.json").string()});
    CHECK(again.code == 0);
    CHECK(json::parse(again.out) == json::parse(r.out));
    CHECK(cli({"serve-manifest", "--manifest", "a", "--adapters", "b"}).code == 2);
    dir.write("bad.json", R"([{"adapter_id":"sel:","artifact_path":"x"}])");
    CHECK(cli({"serve-manifest", "--manifest", (dir / "bad.json").string()}).code == 1);
}

TEST_CASE("bench over the demo suite") {
    auto tasks = load_suite(kSource / "demo/suite");
    REQUIRE(tasks.size() == 3);
    BenchOptions options;
    options.jobs = 4;
    auto result = run_bench(tasks, options);
    REQUIRE(result.rows.size() == 4);
    CHECK(result.runs.size() == 12);
    std::map<std::string, double> pct;
    for (const auto& row : result.rows) {
        CHECK(row.errors == 0u);
        pct[row.configuration] = row.toolfit_percent;
    }
    CHECK(format_percent(pct["flat-base"]) == "73.3");
    CHECK(format_percent(pct["hierarchical-base"]) == "90.0");
    CHECK(format_percent(pct["hierarchical-single"]) == "100.0");
    CHECK(format_percent(pct["hierarchical-decoupled"]) == "100.0");

    // same answers single-threaded
    options.jobs = 1;
    auto serial = run_bench(tasks, options);
    CHECK(format_bench_table(serial) == format_bench_table(result));

    auto r = cli({"bench", "--suite", (kSource / "demo/suite").string(), "--jobs", "2"});
    CHECK(r.code == 0);
    CHECK(r.out == format_bench_table(result));
}

TEST_CASE("bench with a missing script counts an error run") {
    test::TempDir dir;
    fs::copy(kSource / "demo/suite", dir / "suite", fs::copy_options::recursive);
    fs::remove(dir / "suite/tasks/t02-users/scripts/hierarchical-single.jsonl");
    auto tasks = load_suite(dir / "suite");
    auto result = run_bench(tasks);
    for (const auto& row : result.rows) {
        CAPTURE(row.configuration);
        CHECK(row.errors == (row.configuration == "hierarchical-single" ? 1u : 0u));
    }
    CHECK(error_code_of([&] { load_suite(dir / "nope"); }) == Errc::io_error);
}
