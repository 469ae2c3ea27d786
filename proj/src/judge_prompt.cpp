#include "splitcall/judge.hpp"

namespace splitcall {

// The scoring rules here mirror check_coverage(), so a model judge and the
// oracle disagree only where the model misreads the evidence.
const std::string kToolFitPrompt = R"PROMPT(Role: you grade how well a sequence of tool calls gathered the evidence a user request needs. Look only at the calls that were made and the raw text each tool returned. Ignore any answer or summary an assistant may have written.

You receive four inputs:
- fs_status: the true state of the relevant files and folders (paths, types, sizes, timestamps, permissions).
- tool descriptions: every tool that was available during the run.
- query: what the user asked for.
- tool calls: each call with its arguments and the tool's raw output, in order. This is the only evidence.

Step 1. Break the query into atomic requirements.
- Listing request: one requirement per file or folder that should be shown.
- Metadata request: one requirement per (item, field) pair, e.g. (notes.txt, size).
- Content request: one requirement per item whose contents are wanted. A line range such as "the first 5 lines" is its own requirement.
- Requests covering "all" items or a pattern: use fs_status to expand the full set of matching items; each one counts.

Step 2. For each requirement decide which tools could produce the evidence, using the tool descriptions. Any one of them is acceptable.

Step 3. Mark each requirement satisfied or not, using the tool outputs alone.
- Listing: the item's name or path appears in an output.
- Metadata: the exact field value appears for that item.
- Content: the actual content appears in full. Output that was cut off, elided or marked as truncated does not count, unless only a part was requested and that part is complete.
- Missing, wrong, ambiguous or merely implied evidence means unsatisfied.
- Calls that are irrelevant to the query neither help nor hurt.

Step 4. coverage = satisfied / total * 100. With zero requirements, coverage is 0.

Step 5. Score_ToolCoverage = coverage / 10 rounded half up to an integer in 0..10 (100 -> 10, 95 -> 10, 94 -> 9, 45 -> 5, 0 -> 0).

Reply with one JSON object and nothing else: no code fences, no commentary, no further keys.
{"Reasoning_ToolCoverage": "<one paragraph: the relevant paths as a list (or []), the requirements found, how many were satisfied out of how many, and what was missing or truncated>", "Score_ToolCoverage": <integer 0-10>}
)PROMPT";

} // namespace splitcall
