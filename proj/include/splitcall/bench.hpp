#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splitcall/adapter.hpp"
#include "splitcall/gateway.hpp"
#include "splitcall/judge.hpp"

namespace splitcall {

// One cell of the ablation matrix.
struct BenchConfiguration {
    std::string name;
    bool hierarchical = true;
    AdapterPlan plan = AdapterPlan::base_only;
};

// flat-base, hierarchical-base, hierarchical-single, hierarchical-decoupled.
std::vector<BenchConfiguration> ablation_matrix();

struct BenchTask {
    std::string id;
    std::string query;
    GroundTruth truth;
    std::filesystem::path dir;
};

// Suite layout: <suite>/tasks/<id>/task.json holding {"query", "truth"}, and
// per-configuration mock scripts at <suite>/tasks/<id>/scripts/<config>.jsonl.
std::vector<BenchTask> load_suite(const std::filesystem::path& suite);

struct BenchRun {
    std::string configuration;
    std::string task_id;
    Trajectory trajectory;
    CoverageReport report;
};

struct BenchRow {
    std::string configuration;
    std::size_t tasks = 0;
    std::size_t errors = 0;  // runs that terminated with an error
    double toolfit_percent = 0.0;
};

struct BenchResult {
    std::vector<BenchRun> runs;  // configuration-major, task order within
    std::vector<BenchRow> rows;
};

// Returns the backend for one (configuration, task) run. The default uses
// the task's mock script for that configuration.
using BackendProvider = std::function<std::shared_ptr<Backend>(const BenchConfiguration&, const BenchTask&)>;

std::shared_ptr<Backend> scripted_provider(const BenchConfiguration& config, const BenchTask& task);

struct BenchOptions {
    std::size_t jobs = 1;
    std::size_t max_steps = 20;
    BackendProvider backend = scripted_provider;
    // Scratch space for per-run sandboxes; a temp directory when empty.
    std::filesystem::path work_dir;
};

// Every configuration against every task. Each run gets a fresh sandbox
// built from the task's fs_status plus fresh in-memory notion and monday
// toolsets, and is scored with the coverage oracle.
BenchResult run_bench(const std::vector<BenchTask>& tasks, const BenchOptions& options = {});

std::string format_bench_table(const BenchResult& result);
json to_json(const BenchResult& result);

} // namespace splitcall
