#include "splitcall/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>
#include <unistd.h>

#include "splitcall/backends.hpp"
#include "splitcall/error.hpp"
#include "splitcall/orchestrator.hpp"

namespace splitcall {

namespace fs = std::filesystem;

std::vector<BenchConfiguration> ablation_matrix() {
    return {
        {"flat-base", false, AdapterPlan::base_only},
        {"hierarchical-base", true, AdapterPlan::base_only},
        {"hierarchical-single", true, AdapterPlan::single},
        {"hierarchical-decoupled", true, AdapterPlan::decoupled},
    };
}

std::vector<BenchTask> load_suite(const fs::path& suite) {
    const auto tasks_dir = suite / "tasks";
    if (!fs::is_directory(tasks_dir)) {
        throw Error(Errc::io_error, "suite has no tasks/ directory: " + suite.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(tasks_dir)) {
        if (e.is_directory() && fs::exists(e.path() / "task.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<BenchTask> tasks;
    for (const auto& d : dirs) {
        const auto file = d / "task.json";
        json j;
        try {
            j = json::parse(read_text_file(file));
        } catch (const json::parse_error& e) {
            throw Error(Errc::parse_error, file.string() + ": " + e.what());
        }
        BenchTask task;
        task.id = d.filename().string();
        task.dir = d;
        try {
            task.query = j.at("query").get<std::string>();
            task.truth = ground_truth_from_json(j.at("truth"));
        } catch (const json::exception& e) {
            throw Error(Errc::invalid_config, file.string() + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), file.string() + ": " + e.what());
        }
        tasks.push_back(std::move(task));
    }
    if (tasks.empty()) {
        throw Error(Errc::empty_input, "suite has no tasks: " + suite.string());
    }
    return tasks;
}

std::shared_ptr<Backend> scripted_provider(const BenchConfiguration& config, const BenchTask& task) {
    const auto script = task.dir / "scripts" / (config.name + ".jsonl");
    if (!fs::exists(script)) {
        throw Error(Errc::io_error, "missing script " + script.string());
    }
    return std::make_shared<ScriptedBackend>(load_script(script));
}

namespace {

fs::path make_work_dir() {
    auto pattern = (fs::temp_directory_path() / "splitcall-bench-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) {
        throw Error(Errc::io_error, "cannot create bench work directory");
    }
    return pattern;
}

BenchRun run_one(const BenchConfiguration& config, const BenchTask& task, const fs::path& sandbox,
                 const BenchOptions& options) {
    BenchRun run;
    run.configuration = config.name;
    run.task_id = task.id;
    run.trajectory.id = config.name + "/" + task.id;
    run.trajectory.query = task.query;
    try {
        materialize_fs(task.truth.fs_status, sandbox);

        ToolHub hub;
        ToolsetConfig files;
        files.toolset_id = "filesystem";
        files.sandbox.allowed_roots = {sandbox};
        files.sandbox.timeout = std::chrono::milliseconds(10000);
        hub.register_toolset(files);
        for (const char* kind : {"notion", "monday"}) {
            ToolsetConfig c;
            c.toolset_id = kind;
            hub.register_toolset(c);
        }

        Gateway gateway(options.backend(config, task));
        Orchestrator orchestrator(hub, gateway, config.plan);
        SessionConfig session;
        session.hierarchical = config.hierarchical;
        session.max_steps = options.max_steps;
        auto id = run.trajectory.id;
        run.trajectory = orchestrator.run(task.query, session);
        run.trajectory.id = id;
    } catch (const Error& e) {
        run.trajectory.terminated_by = Termination::error;
        run.trajectory.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    run.report = check_coverage(task.truth, run.trajectory);
    return run;
}

} // namespace

BenchResult run_bench(const std::vector<BenchTask>& tasks, const BenchOptions& options) {
    const auto matrix = ablation_matrix();
    const bool own_dir = options.work_dir.empty();
    const fs::path work = own_dir ? make_work_dir() : options.work_dir;
    fs::create_directories(work);

    const std::size_t total = matrix.size() * tasks.size();
    std::vector<BenchRun> runs(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            const auto& config = matrix[k / tasks.size()];
            const auto& task = tasks[k % tasks.size()];
            runs[k] = run_one(config, task, work / (config.name + "__" + task.id), options);
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, total);
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < jobs; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    if (own_dir) {
        std::error_code ec;
        fs::remove_all(work, ec);
    }

    BenchResult result;
    for (std::size_t c = 0; c < matrix.size(); ++c) {
        BenchRow row;
        row.configuration = matrix[c].name;
        std::vector<CoverageReport> reports;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const auto& run = runs[c * tasks.size() + t];
            reports.push_back(run.report);
            if (run.trajectory.terminated_by == Termination::error) ++row.errors;
        }
        row.tasks = tasks.size();
        row.toolfit_percent = aggregate(reports);
        result.rows.push_back(row);
    }
    result.runs = std::move(runs);
    return result;
}

std::string format_bench_table(const BenchResult& result) {
    std::size_t width = std::string("configuration").size();
    for (const auto& r : result.rows) width = std::max(width, r.configuration.size());
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    std::string out = pad("configuration", width) + "  tasks  errors  ToolFit %\n";
    for (const auto& r : result.rows) {
        auto tasks = std::to_string(r.tasks);
        auto errors = std::to_string(r.errors);
        auto pct = format_percent(r.toolfit_percent);
        out += pad(r.configuration, width) + "  " + std::string(5 - std::min<std::size_t>(5, tasks.size()), ' ') +
               tasks + "  " + std::string(6 - std::min<std::size_t>(6, errors.size()), ' ') + errors + "  " +
               std::string(9 - std::min<std::size_t>(9, pct.size()), ' ') + pct + "\n";
    }
    return out;
}

json to_json(const BenchResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"configuration", r.configuration},
                        {"tasks", r.tasks},
                        {"errors", r.errors},
                        {"toolfit_percent", r.toolfit_percent}});
    }
    json runs = json::array();
    for (const auto& r : result.runs) {
        runs.push_back({{"configuration", r.configuration},
                        {"task", r.task_id},
                        {"steps", r.trajectory.steps.size()},
                        {"terminated_by", to_string(r.trajectory.terminated_by)},
                        {"error", r.trajectory.error},
                        {"report", to_json(r.report)}});
    }
    return json{{"rows", rows}, {"runs", runs}};
}

} // namespace splitcall
