#include "splitcall/trajectory.hpp"

#include <algorithm>

#include "splitcall/error.hpp"

namespace splitcall {

namespace fs = std::filesystem;

json to_json(const Step& step) {
    return json{{"index", step.index},
                {"toolset_id", step.toolset_id},
                {"tool", step.tool},
                {"arguments", step.arguments},
                {"result", to_json(step.result)},
                {"model_calls", step.model_calls},
                {"argument_attempts", step.argument_attempts}};
}

Step step_from_json(const json& j) {
    Step s;
    s.index = j.at("index").get<std::size_t>();
    s.toolset_id = j.at("toolset_id").get<std::string>();
    s.tool = j.at("tool").get<std::string>();
    s.arguments = j.value("arguments", json());
    s.result = tool_result_from_json(j.at("result"));
    s.model_calls = j.value("model_calls", std::size_t{0});
    s.argument_attempts = j.value("argument_attempts", std::size_t{0});
    return s;
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
    case Termination::summarize: return "summarize";
    case Termination::max_steps: return "max_steps";
    case Termination::error: return "error";
    }
    return "error";
}

Termination termination_from_string(std::string_view text) {
    if (text == "summarize") return Termination::summarize;
    if (text == "max_steps") return Termination::max_steps;
    if (text == "error") return Termination::error;
    throw Error(Errc::parse_error, "unknown termination: " + std::string(text));
}

std::string to_trace_jsonl(const Trajectory& t) {
    std::string out;
    for (const auto& step : t.steps) {
        json record = to_json(step);
        record["record"] = "step";
        out += canonical_dump(record) + "\n";
    }
    json summary{{"record", "summary"},
                 {"id", t.id},
                 {"query", t.query},
                 {"summary", t.summary},
                 {"terminated_by", to_string(t.terminated_by)},
                 {"error", t.error},
                 {"final_toolset", t.final_toolset},
                 {"steps", t.steps.size()},
                 {"query_id", t.query_id},
                 {"query_toolset", t.query_toolset},
                 {"query_tool", t.query_tool}};
    out += canonical_dump(summary) + "\n";
    return out;
}

Trajectory trajectory_from_trace(const std::vector<json>& records) {
    Trajectory t;
    bool have_summary = false;
    try {
        for (const auto& r : records) {
            const auto kind = r.at("record").get<std::string>();
            if (have_summary) {
                throw Error(Errc::malformed_trajectory, "record after the summary record");
            }
            if (kind == "step") {
                t.steps.push_back(step_from_json(r));
            } else if (kind == "summary") {
                have_summary = true;
                t.id = r.value("id", std::string{});
                t.query = r.at("query").get<std::string>();
                t.summary = r.value("summary", std::string{});
                t.terminated_by = termination_from_string(r.at("terminated_by").get<std::string>());
                t.error = r.value("error", std::string{});
                t.final_toolset = r.value("final_toolset", std::string{});
                t.query_id = r.value("query_id", std::string{});
                t.query_toolset = r.value("query_toolset", std::string{});
                t.query_tool = r.value("query_tool", std::string{});
                if (r.contains("steps") && r["steps"].get<std::size_t>() != t.steps.size()) {
                    throw Error(Errc::malformed_trajectory, "summary step count does not match step records");
                }
            } else {
                throw Error(Errc::malformed_trajectory, "unknown record type: " + kind);
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::malformed_trajectory, std::string("bad trace record: ") + e.what());
    }
    if (!have_summary) {
        throw Error(Errc::malformed_trajectory, "trace has no summary record");
    }
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].index != i) {
            throw Error(Errc::malformed_trajectory, "step indices are not consecutive");
        }
    }
    return t;
}

void write_trace(const fs::path& path, const Trajectory& trajectory) {
    write_file_atomic(path, to_trace_jsonl(trajectory));
}

Trajectory read_trace(const fs::path& path) {
    try {
        return trajectory_from_trace(read_jsonl(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<Trajectory> read_trace_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw Error(Errc::io_error, "not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Trajectory> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        out.push_back(read_trace(f));
    }
    return out;
}

} // namespace splitcall
