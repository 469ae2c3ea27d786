#include "splitcall/cli.hpp"

#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "splitcall/bench.hpp"
#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/config.hpp"
#include "splitcall/dataset.hpp"
#include "splitcall/error.hpp"
#include "splitcall/judge.hpp"
#include "splitcall/prompts.hpp"

namespace splitcall {

namespace fs = std::filesystem;

namespace {

struct RunArgs {
    std::string query;
    std::string config;
    std::size_t max_steps = 0;
    bool flat = false;
    std::string trace = "trace.jsonl";
};

struct GenDataArgs {
    std::string config;
    std::string toolset;
    std::size_t per_tool = 1000;
    std::string out;
    bool capture = false;
    std::size_t retries = 3;
};

struct ExtractArgs {
    std::string trajectories;
    std::string out;
    double split = 0.8;
    std::size_t test = 50;
    std::uint64_t seed = 0;
    std::string catalog;
    std::string config;
};

struct JudgeArgs {
    std::string trace;
    std::string truth;
    bool llm = false;
    std::string backend;
    std::string config;
    std::string prompt_file;
};

struct BenchArgs {
    std::string suite;
    std::size_t jobs = 1;
    std::size_t max_steps = 20;
    std::string backend;
    std::string json_out;
};

struct ManifestArgs {
    std::string manifest;
    std::string adapters;
    std::string out;
};

void print_line(std::ostream& out, const json& j) { out << canonical_dump(j) << "\n"; }

int cmd_run(const RunArgs& a, std::ostream& out) {
    auto config = load_config(a.config);
    if (a.max_steps > 0) config.session.max_steps = a.max_steps;
    if (a.flat) config.session.hierarchical = false;
    if (!config.adapter_manifest.empty()) {
        load_manifest(config.adapter_manifest);  // fail early on a broken manifest
    }
    ToolHub hub;
    register_toolsets(hub, config);
    Gateway gateway(make_backend(config.backend), config.adapter_cache_capacity);
    Orchestrator orchestrator(hub, gateway, config.plan);
    auto trajectory = orchestrator.run(a.query, config.session);
    write_trace(a.trace, trajectory);
    print_line(out, {{"trace", a.trace},
                     {"steps", trajectory.steps.size()},
                     {"terminated_by", to_string(trajectory.terminated_by)},
                     {"summary", trajectory.summary}});
    if (trajectory.terminated_by == Termination::error) {
        throw Error(Errc::backend_unreachable, "session ended with an error: " + trajectory.error);
    }
    return 0;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
    auto config = load_config(a.config);
    ToolHub hub;
    register_toolsets(hub, config);
    auto catalog = hub.catalog();
    if (!catalog.toolsets.count(a.toolset)) {
        throw Error(Errc::unknown_toolset, "unknown toolset: " + a.toolset);
    }
    Gateway gateway(make_backend(config.backend), config.adapter_cache_capacity);
    const auto names = catalog.all_tool_names();
    SynthesisOptions options;
    options.retries_per_query = a.retries;

    const fs::path dir(a.out);
    std::vector<SyntheticQuery> queries;
    for (const auto& spec : catalog.toolsets.at(a.toolset).tools) {
        auto batch = synthesize_queries(spec, a.per_tool, gateway, names, options);
        queries.insert(queries.end(), batch.begin(), batch.end());
    }
    write_queries(dir / "queries.jsonl", queries);
    write_file_atomic(dir / "catalog.json", to_json(catalog).dump(2) + "\n");

    json summary{{"queries", queries.size()}, {"out", dir.string()}};
    if (a.capture) {
        // Generator trajectories: the configured model drives every stage.
        Orchestrator orchestrator(hub, gateway, AdapterPlan::base_only);
        std::vector<Trajectory> captured;
        for (const auto& q : queries) {
            auto t = orchestrator.run(q.text, config.session);
            t.id = q.id;
            t.query_id = q.id;
            t.query_toolset = q.toolset_id;
            t.query_tool = q.tool;
            write_trace(dir / "trajectories" / (q.id + ".jsonl"), t);
            captured.push_back(std::move(t));
        }
        auto flagged = lint_trajectories(captured);
        write_file_atomic(dir / "lint.json", json{{"over_20_steps", flagged}}.dump(2) + "\n");
        summary["trajectories"] = captured.size();
        summary["flagged"] = flagged.size();
    }
    print_line(out, summary);
    return 0;
}

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
    Catalog catalog;
    std::string system_prompt = prompts::kDefaultSystemPrompt;
    if (!a.catalog.empty()) {
        try {
            catalog = catalog_from_json(json::parse(read_text_file(a.catalog)));
        } catch (const json::exception& e) {
            throw Error(Errc::invalid_config, a.catalog + ": " + e.what());
        }
    } else if (!a.config.empty()) {
        auto config = load_config(a.config);
        ToolHub hub;
        register_toolsets(hub, config);
        catalog = hub.catalog();
        if (!config.session.system_prompt.empty()) system_prompt = config.session.system_prompt;
    } else {
        throw Error(Errc::invalid_config, "extract needs --catalog or --config to rebuild prompts");
    }

    auto trajectories = read_trace_directory(a.trajectories);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        if (trajectories[i].id.empty()) trajectories[i].id = "t" + std::to_string(i);
    }

    std::vector<SyntheticQuery> test;
    std::vector<Trajectory> pool;
    if (a.test > 0) {
        std::map<std::string, std::vector<SyntheticQuery>> by_tool;
        for (const auto& t : trajectories) {
            std::string toolset = t.query_toolset, tool = t.query_tool;
            if (tool.empty() && !t.steps.empty()) {
                toolset = t.steps.front().toolset_id;
                tool = t.steps.front().tool;
            }
            auto id = t.query_id.empty() ? t.id : t.query_id;
            by_tool[toolset + "/" + tool].push_back({id, toolset, tool, t.query});
        }
        test = reserve_test_set(by_tool, a.test, a.seed);
        std::set<std::string> reserved;
        for (const auto& q : test) reserved.insert(q.id);
        for (auto& t : trajectories) {
            if (!reserved.count(t.query_id.empty() ? t.id : t.query_id)) pool.push_back(std::move(t));
        }
    } else {
        pool = std::move(trajectories);
    }

    auto split = split_dataset(pool, catalog, system_prompt, a.split, a.seed);
    const fs::path dir(a.out);
    write_instances(dir / "train.jsonl", split.train);
    write_instances(dir / "validation.jsonl", split.validation);
    write_queries(dir / "test_queries.jsonl", test);
    json report{{"seed", a.seed},
                {"ratio", a.split},
                {"train_trajectories", split.train_trajectories},
                {"validation_trajectories", split.validation_trajectories},
                {"train_instances", split.train.size()},
                {"validation_instances", split.validation.size()},
                {"test_queries", test.size()},
                {"over_20_steps", lint_trajectories(pool)}};
    write_file_atomic(dir / "split.json", report.dump(2) + "\n");
    print_line(out, {{"train_trajectories", split.train_trajectories.size()},
                     {"validation_trajectories", split.validation_trajectories.size()},
                     {"train_instances", split.train.size()},
                     {"validation_instances", split.validation.size()},
                     {"test_queries", test.size()}});
    return 0;
}

int cmd_judge(const JudgeArgs& a, std::ostream& out) {
    auto trajectory = read_trace(a.trace);
    auto truth = load_ground_truth(a.truth);
    if (!a.llm) {
        print_line(out, to_json(check_coverage(truth, trajectory)));
        return 0;
    }
    std::vector<ToolSpec> tools;
    BackendSpec backend;
    if (!a.config.empty()) {
        auto config = load_config(a.config);
        ToolHub hub;
        register_toolsets(hub, config);
        for (const auto& id : hub.toolset_ids()) {
            auto specs = hub.list_tools(id);
            tools.insert(tools.end(), specs.begin(), specs.end());
        }
        backend = config.backend;
    } else {
        tools = make_builtin_toolset("filesystem")->tools();
    }
    if (!a.backend.empty()) {
        backend.url = a.backend.rfind("mock:", 0) == 0 ? "mock:" + fs::absolute(a.backend.substr(5)).string()
                                                       : a.backend;
    }
    if (backend.url.empty()) {
        throw Error(Errc::invalid_config, "--llm needs --backend or a --config with a backend");
    }
    const std::string instructions = a.prompt_file.empty() ? kToolFitPrompt : read_text_file(a.prompt_file);
    Gateway gateway(make_backend(backend));
    print_line(out, to_json(llm_judge(trajectory, truth, tools, gateway, instructions)));
    return 0;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    auto tasks = load_suite(a.suite);
    BenchOptions options;
    options.jobs = a.jobs;
    options.max_steps = a.max_steps;
    if (!a.backend.empty()) {
        BackendSpec spec;
        spec.url = a.backend;
        if (spec.is_mock()) {
            throw Error(Errc::invalid_config, "bench uses per-task scripts for mock runs; --backend takes a URL");
        }
        auto shared = make_backend(spec);
        options.backend = [shared](const BenchConfiguration&, const BenchTask&) { return shared; };
    }
    auto result = run_bench(tasks, options);
    if (!a.json_out.empty()) {
        write_file_atomic(a.json_out, to_json(result).dump(2) + "\n");
    }
    out << format_bench_table(result);
    return 0;
}

int cmd_manifest(const ManifestArgs& a, std::ostream& out) {
    std::vector<ManifestEntry> manifest =
        a.adapters.empty() ? load_manifest(a.manifest) : scan_adapter_directory(a.adapters);
    if (!a.out.empty()) {
        save_manifest(a.out, manifest);
    }
    out << to_json(manifest).dump(2) << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical tool-calling orchestrator with per-stage model adapters", "splitcall"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one agent session and write its trace");
    run_cmd->add_option("--query", run.query, "User request")->required();
    run_cmd->add_option("--config", run.config, "TOML config file")->required();
    run_cmd->add_option("--max-steps", run.max_steps, "Override session.max_steps")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--flat", run.flat, "Single tool list over all toolsets (no routing)");
    run_cmd->add_option("--trace", run.trace, "Trace output path")->capture_default_str();

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic queries (and optionally trajectories)");
    gen_cmd->add_option("--config", gen.config, "TOML config file")->required();
    gen_cmd->add_option("--toolset", gen.toolset, "Toolset to generate for")->required();
    gen_cmd->add_option("--per-tool", gen.per_tool, "Queries per tool")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_flag("--capture", gen.capture, "Also run each query and save its trajectory");
    gen_cmd->add_option("--retries", gen.retries, "Regenerations allowed per query after lint failures")
        ->capture_default_str();

    ExtractArgs ext;
    auto* ext_cmd = app.add_subcommand("extract", "Build mask-annotated training data from trajectories");
    ext_cmd->add_option("--trajectories", ext.trajectories, "Directory of trace files")->required();
    ext_cmd->add_option("--out", ext.out, "Output directory")->required();
    ext_cmd->add_option("--split", ext.split, "Training fraction")->capture_default_str();
    ext_cmd->add_option("--test", ext.test, "Queries reserved as a test set")->capture_default_str();
    ext_cmd->add_option("--seed", ext.seed, "Shuffle seed")->capture_default_str();
    auto* catalog_opt = ext_cmd->add_option("--catalog", ext.catalog, "Catalog JSON written by gen-data");
    auto* ext_config = ext_cmd->add_option("--config", ext.config, "TOML config (alternative to --catalog)");
    catalog_opt->excludes(ext_config);

    JudgeArgs judge;
    auto* judge_cmd = app.add_subcommand("judge", "Score a trace against ground truth");
    judge_cmd->add_option("--trace", judge.trace, "Trace file")->required();
    judge_cmd->add_option("--truth", judge.truth, "Ground-truth JSON")->required();
    judge_cmd->add_flag("--llm", judge.llm, "Ask a judge model instead of the coverage oracle");
    judge_cmd->add_option("--backend", judge.backend, "Judge backend URL or mock:<script>");
    judge_cmd->add_option("--config", judge.config, "TOML config for tool descriptions and backend");
    judge_cmd->add_option("--prompt-file", judge.prompt_file, "Replace the built-in judge instructions");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run the four-configuration ablation over a task suite");
    bench_cmd->add_option("--suite", bench.suite, "Suite directory")->required();
    bench_cmd->add_option("--jobs", bench.jobs, "Parallel runs")->capture_default_str()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-steps", bench.max_steps, "Step budget per run")->capture_default_str();
    bench_cmd->add_option("--backend", bench.backend, "Serve every run from this URL instead of mock scripts");
    bench_cmd->add_option("--json", bench.json_out, "Also write per-run results as JSON");

    ManifestArgs manifest;
    auto* manifest_cmd = app.add_subcommand("serve-manifest", "Validate or build the adapter manifest");
    auto* m_opt = manifest_cmd->add_option("--manifest", manifest.manifest, "Existing manifest to validate");
    auto* a_opt = manifest_cmd->add_option("--adapters", manifest.adapters, "Directory of adapter folders to scan");
    manifest_cmd->add_option("--out", manifest.out, "Write the manifest here");
    m_opt->excludes(a_opt);
    manifest_cmd->require_option(1, 2);

    std::vector<std::string> argv_storage{"splitcall"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto selected = app.get_subcommands();
        err << (selected.empty() ? app.help() : selected.back()->help());
        return 2;
    }
    if (manifest_cmd->parsed() && manifest.manifest.empty() && manifest.adapters.empty()) {
        err << "error: serve-manifest needs --manifest or --adapters\n" << manifest_cmd->help();
        return 2;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run, out);
        if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
        if (ext_cmd->parsed()) return cmd_extract(ext, out);
        if (judge_cmd->parsed()) return cmd_judge(judge, out);
        if (bench_cmd->parsed()) return cmd_bench(bench, out);
        if (manifest_cmd->parsed()) return cmd_manifest(manifest, out);
    } catch (const Error& e) {
        print_line(err, {{"error", to_string(e.code())}, {"message", e.what()}});
        return 1;
    } catch (const fs::filesystem_error& e) {
        print_line(err, {{"error", to_string(Errc::io_error)}, {"message", e.what()}});
        return 1;
    }
    return 2;
}

} // namespace splitcall
