#!/usr/bin/env python3
"""Regenerates demo/suite: three filesystem tasks with mock scripts for each
bench configuration. The scripts are hand-written stand-ins for model replies,
chosen so the four configurations land on different ToolFit numbers."""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent / "suite" / "tasks"

FS = [
    {"path": "reports", "type": "directory", "permissions": "755", "modified": "2024-09-01T08:00:00Z"},
    {"path": "reports/q3.md", "type": "file", "permissions": "644", "modified": "2024-09-30T17:45:00Z",
     "content": "# Q3\nRevenue up 12%.\nChurn flat.\n"},
    {"path": "reports/q4.md", "type": "file", "permissions": "644", "modified": "2024-12-31T17:45:00Z",
     "content": "# Q4\nPlanning in progress.\n"},
    {"path": "data", "type": "directory", "permissions": "755", "modified": "2024-08-15T10:00:00Z"},
    {"path": "data/users.csv", "type": "file", "permissions": "640", "modified": "2024-08-15T10:20:30Z",
     "content": "id,name\n1,ada\n2,lin\n3,sam\n"},
    {"path": "logs", "type": "directory", "permissions": "755", "modified": "2024-10-02T06:00:00Z"},
    {"path": "logs/app.log", "type": "file", "permissions": "644", "modified": "2024-10-02T06:10:00Z",
     "content": "boot ok\nlistening on :8080\nrequest /health\nrequest /metrics\n"},
]

TASKS = {
    "t01-reports": {
        "query": "Which files are in the reports folder, and what does the Q3 report say?",
        "requirements": [
            {"id": "r1", "kind": "listing", "item": "reports/q3.md", "satisfied_by": ["list_directory", "directory_tree"]},
            {"id": "r2", "kind": "listing", "item": "reports/q4.md", "satisfied_by": ["list_directory", "directory_tree"]},
            {"id": "r3", "kind": "content", "item": "reports/q3.md", "satisfied_by": ["read_file", "read_multiple_files"]},
        ],
        "good": [("list_directory", {"path": "reports"}), ("read_file", {"path": "reports/q3.md"})],
        "weak": [("list_directory", {"path": "reports"})],
        "summary": "reports/ holds q3.md and q4.md; Q3 revenue rose 12% with flat churn.",
    },
    "t02-users": {
        "query": "How big is data/users.csv and when was it last changed?",
        "requirements": [
            {"id": "r1", "kind": "metadata", "item": "data/users.csv", "field": "size", "satisfied_by": ["get_file_info", "list_directory"]},
            {"id": "r2", "kind": "metadata", "item": "data/users.csv", "field": "modified", "satisfied_by": ["get_file_info"]},
        ],
        "good": [("get_file_info", {"path": "data/users.csv"})],
        "weak": [("list_directory", {"path": "data"})],
        "summary": "data/users.csv is 29 bytes, last modified 2024-08-15T10:20:30Z.",
    },
    "t03-log-head": {
        "query": "Show me the first two lines of logs/app.log.",
        "requirements": [
            {"id": "r1", "kind": "range", "item": "logs/app.log", "range": {"head": 2}, "satisfied_by": ["read_file"]},
        ],
        "good": [("read_file", {"head": 2, "path": "logs/app.log"})],
        "weak": [("read_file", {"head": 2, "path": "logs/app.log"})],
        "summary": "The log starts with 'boot ok' then 'listening on :8080'.",
    },
}

CONFIGS = {
    # name: (hierarchical, selector adapter, argument adapter, which plan of calls)
    "flat-base": (False, lambda t: "base", lambda t: "base", "weak"),
    "hierarchical-base": (True, lambda t: "base", lambda t: "base", "weak"),
    "hierarchical-single": (True, lambda t: "sel:filesystem", lambda t: "sel:filesystem", "good"),
    "hierarchical-decoupled": (True, lambda t: "sel:filesystem", lambda t: f"arg:filesystem:{t}", "good"),
}


def script(config, task):
    hierarchical, sel, arg, quality = CONFIGS[config]
    calls = task[quality]
    # hierarchical-base only misses on the first task; flat-base misses on two.
    if config == "hierarchical-base" and task is not TASKS["t01-reports"]:
        calls = task["good"]
    rows = []
    for tool, args in calls:
        if hierarchical:
            rows.append({"adapter": "base", "reply": "filesystem"})
        rows.append({"adapter": sel(tool), "reply": tool})
        rows.append({"adapter": arg(tool), "reply": json.dumps(args, sort_keys=True)})
    if hierarchical:
        rows.append({"adapter": "base", "reply": "filesystem"})
    rows.append({"adapter": sel("summarize"), "reply": "summarize"})
    rows.append({"adapter": "base", "reply": task["summary"]})
    return rows


def main():
    for tid, task in TASKS.items():
        d = ROOT / tid
        (d / "scripts").mkdir(parents=True, exist_ok=True)
        truth = {"fs_status": FS, "requirements": task["requirements"]}
        (d / "task.json").write_text(json.dumps({"query": task["query"], "truth": truth}, indent=2) + "\n")
        for config in CONFIGS:
            rows = script(config, task)
            text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
            (d / "scripts" / f"{config}.jsonl").write_text(text)


if __name__ == "__main__":
    main()
