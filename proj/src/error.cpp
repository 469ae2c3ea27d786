#include "splitcall/error.hpp"

namespace splitcall {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::transport_failure: return "transport-failure";
    case Errc::unknown_toolset: return "unknown-toolset";
    case Errc::unknown_tool: return "unknown-tool";
    case Errc::sandbox_violation: return "sandbox-violation";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_arguments: return "invalid-arguments";
    case Errc::backend_unreachable: return "backend-unreachable";
    case Errc::unknown_adapter: return "unknown-adapter";
    case Errc::timeout: return "timeout";
    case Errc::script_exhausted: return "script-exhausted";
    case Errc::adapter_mismatch: return "adapter-mismatch";
    case Errc::constraint_violation: return "constraint-violation";
    case Errc::malformed_trajectory: return "malformed-trajectory";
    case Errc::too_few_trajectories: return "too-few-trajectories";
    case Errc::insufficient_queries: return "insufficient-queries";
    case Errc::generator_failure: return "generator-failure";
    case Errc::lint_budget_exhausted: return "lint-budget-exhausted";
    case Errc::judge_unreachable: return "judge-unreachable";
    case Errc::malformed_verdict: return "malformed-verdict";
    case Errc::empty_input: return "empty-input";
    case Errc::out_of_range: return "out-of-range";
    case Errc::invalid_config: return "invalid-config";
    case Errc::io_error: return "io-error";
    case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

} // namespace splitcall
