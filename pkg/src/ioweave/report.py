"""JSON reports and the figures that accompany them."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Optional

import jsonschema
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scenarios import schema  # noqa: E402

SCHEMA_VERSION = "igloo-kit/1"


def check_entry(name: str, status: str, counterexample: Optional[list] = None,
                **details: Any) -> dict:
    entry: dict = {"name": name, "status": status}
    if counterexample is not None:
        entry["counterexample"] = counterexample
    if details:
        entry["details"] = details
    return entry


def overall(checks: Iterable[dict]) -> str:
    statuses = {c["status"] for c in checks}
    if "BUDGET_EXCEEDED" in statuses:
        return "BUDGET_EXCEEDED"
    return "FAIL" if "FAIL" in statuses else "PASS"


def make_report(command: str, checks: list, scenario: Optional[str] = None,
                params: Optional[dict] = None, summary: Optional[dict] = None,
                text: Optional[str] = None) -> dict:
    report = {"schema": SCHEMA_VERSION, "command": command, "status": overall(checks),
              "scenario": scenario, "params": params or {}, "checks": checks,
              "summary": summary or {}, "figures": []}
    if text is not None:
        report["text"] = text
    return report


def validate_report(report: dict) -> dict:
    jsonschema.validate(report, schema("report"))
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# figures


def _save(fig, path: Path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path.name


def plot_check_sizes(checks: list, path: Path) -> str:
    """Bar chart of the explored size of each check, coloured by status."""
    names = [c["name"] for c in checks]
    sizes = [c.get("details", {}).get("size", 0) for c in checks]
    colours = ["tab:green" if c["status"] == "PASS" else "tab:red" for c in checks]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * len(names) + 2), 3.5))
    ax.bar(range(len(names)), sizes, color=colours)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("traces / states explored")
    ax.set_yscale("symlog")
    return _save(fig, path)


def plot_timeline(records: list, path: Path) -> str:
    """Cumulative count of logged actions per node over simulation steps."""
    per_node: dict = {}
    for r in records:
        if r.node is None or r.kind not in ("io", "ghost"):
            continue
        per_node.setdefault(str(r.node), []).append(r.step)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for node in sorted(per_node):
        steps = per_node[node]
        ax.step(steps, range(1, len(steps) + 1), where="post", label=node)
    ax.set_xlabel("step")
    ax.set_ylabel("actions committed")
    if per_node:
        ax.legend(fontsize=7, title="node")
    return _save(fig, path)


def plot_event_kinds(records: list, path: Path) -> str:
    """Histogram of global event names in the log."""
    counts: dict = {}
    for r in records:
        if r.event is not None:
            counts[r.event.name] = counts.get(r.event.name, 0) + 1
    names = sorted(counts)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.barh(names, [counts[n] for n in names], color="tab:blue")
    ax.set_xlabel("occurrences")
    return _save(fig, path)


def write_outputs(report: dict, out: Path, records: Optional[list] = None) -> dict:
    """Render figures next to ``out`` and write the validated JSON report."""
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    figures = []
    if records is not None:
        figures.append(plot_timeline(records, Path(f"{stem}-timeline.png")))
        figures.append(plot_event_kinds(records, Path(f"{stem}-events.png")))
    elif report["checks"]:
        figures.append(plot_check_sizes(report["checks"], Path(f"{stem}-checks.png")))
    report["figures"] = figures
    validate_report(report)
    out.write_text(dumps(report), encoding="utf-8")
    return report
