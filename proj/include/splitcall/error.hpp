#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splitcall {

// Domain error codes. The kebab-case spelling from to_string() is what the
// CLI prints, so treat it as part of the external interface.
enum class Errc {
    duplicate_id,
    transport_failure,
    unknown_toolset,
    unknown_tool,
    sandbox_violation,
    invalid_argument,
    invalid_arguments,
    backend_unreachable,
    unknown_adapter,
    timeout,
    script_exhausted,
    adapter_mismatch,
    constraint_violation,
    malformed_trajectory,
    too_few_trajectories,
    insufficient_queries,
    generator_failure,
    lint_budget_exhausted,
    judge_unreachable,
    malformed_verdict,
    empty_input,
    out_of_range,
    invalid_config,
    io_error,
    parse_error,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace splitcall
