#include <chrono>
#include <stdexcept>
#include <thread>

#include "splitcall/builtin_toolsets.hpp"
#include "splitcall/error.hpp"
#include "splitcall/sandbox.hpp"

namespace splitcall::detail {

namespace {

// Tools with controllable timing and output size. Every call runs in a
// separate process so a sleeping call can be killed at the timeout.
class DebugToolset : public Toolset {
public:
    std::vector<ToolSpec> tools() override {
        return {
            make_spec("echo", "Return the given text unchanged.",
                      object_schema({{"text", {{"type", "string"}}}}, {"text"})),
            make_spec("emit", "Return a payload of exactly `bytes` copies of the letter x.",
                      object_schema({{"bytes", {{"type", "integer"}, {"minimum", 0}}}}, {"bytes"})),
            make_spec("fail", "Fail with the given message.",
                      object_schema({{"message", {{"type", "string"}}}}, {"message"})),
            make_spec("sleep", "Sleep for `ms` milliseconds, or forever when forever=true.",
                      object_schema({{"ms", {{"type", "integer"}, {"minimum", 0}}},
                                     {"forever", {{"type", "boolean"}}}},
                                    {})),
        };
    }

    std::string description() const override { return "Diagnostics: echo, emit, fail, sleep."; }

    ToolResult call(const ToolSpec& spec, const json& args, const SandboxPolicy& policy) override {
        const auto& tool = spec.name;
        if (tool == "echo") {
            auto text = args.at("text").get<std::string>();
            return run_isolated([text] { return text; }, policy);
        }
        if (tool == "emit") {
            auto bytes = args.at("bytes").get<std::size_t>();
            return run_isolated([bytes] { return std::string(bytes, 'x'); }, policy);
        }
        if (tool == "fail") {
            auto message = args.at("message").get<std::string>();
            return run_isolated([message]() -> std::string { throw std::runtime_error(message); },
                                policy);
        }
        if (tool == "sleep") {
            bool forever = args.value("forever", false);
            auto ms = args.value("ms", std::int64_t{0});
            return run_isolated(
                [forever, ms] {
                    if (forever) {
                        while (true) std::this_thread::sleep_for(std::chrono::hours(1));
                    }
                    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
                    return std::string("slept " + std::to_string(ms) + " ms");
                },
                policy);
        }
        throw Error(Errc::unknown_tool, "unknown tool: debug/" + tool);
    }
};

} // namespace

std::unique_ptr<Toolset> make_debug_toolset() { return std::make_unique<DebugToolset>(); }

} // namespace splitcall::detail
