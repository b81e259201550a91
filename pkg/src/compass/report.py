"""Render compartment reports as aligned tables, JSON documents, and CSV."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .compartments import Compartment, CompartmentReport, WeightBreakdown
from .coverage import AnalysisConfig, FrontierEdge
from .errors import FormatError
from .labels import LabelSet

COLUMNS = (
    "Rank",
    "Function",
    "Weight",
    "Block Weight",
    "Calls Weight",
    "Profile Cnt",
    "Label",
    "Conditional",
    "Compartment",
    "Input",
    "Solution",
)
_NUMERIC = {"Rank", "Weight", "Block Weight", "Calls Weight", "Profile Cnt"}


@dataclass(frozen=True)
class RenderOptions:
    format: str = "table"  # table | json | csv
    columns: tuple[str, ...] = COLUMNS
    max_col_width: int = 0  # 0 = unlimited


def _cell(rank: int, c: Compartment, column: str) -> str:
    if column == "Rank":
        return str(rank)
    if column == "Function":
        return c.function
    if column == "Weight":
        return str(c.weight.total)
    if column == "Block Weight":
        return str(c.weight.block_weight)
    if column == "Calls Weight":
        return str(c.weight.calls_weight)
    if column == "Profile Cnt":
        return str(c.conditional_count)
    if column == "Label":
        return c.labels.render()
    if column == "Conditional":
        return c.conditional_loc
    if column == "Compartment":
        return c.entry_loc
    if column == "Input":
        return c.input_name
    if column == "Solution":
        return c.solution_name
    raise FormatError(f"unknown column {column!r}")


def entry_to_doc(c: Compartment, rank: int) -> dict:
    return {
        "rank": rank,
        "function": c.function,
        "weight": c.weight.total,
        "block_weight": c.weight.block_weight,
        "calls_weight": c.weight.calls_weight,
        "profile_cnt": c.conditional_count,
        "label": c.labels.render(),
        "conditional": c.conditional_loc,
        "compartment": c.entry_loc,
        "input": c.input_name,
        "solution": c.solution_name,
        "status": c.status,
        "kind": c.kind,
        "entry_block": c.entry_block,
        "conditional_block": c.conditional_block,
    }


def export_report(report: CompartmentReport) -> dict:
    doc = {
        "config": {
            "max_exec_count": report.config.max_exec_count,
            "top_k": report.config.top_k,
            "roots": list(report.config.roots),
        },
        "snapshot": report.snapshot_tag,
        "entries": [entry_to_doc(c, i + 1) for i, c in enumerate(report.entries)],
    }
    if report.resolved:
        doc["resolved"] = [entry_to_doc(c, 0) for c in report.resolved]
    return doc


def report_to_json(report: CompartmentReport) -> str:
    return json.dumps(export_report(report), indent=2) + "\n"


def _doc_to_entry(raw: object, where: str) -> Compartment:
    if not isinstance(raw, dict):
        raise FormatError(f"malformed report {where}")
    try:
        weight = WeightBreakdown(int(raw["block_weight"]), int(raw["calls_weight"]))
        if weight.total != int(raw["weight"]):
            raise FormatError(
                f"weight mismatch in report {where}: "
                f"{raw['weight']} != {raw['block_weight']} + {raw['calls_weight']}"
            )
        kind = raw["kind"]
        conditional = None
        if kind == "frontier":
            conditional = FrontierEdge(
                function=raw["function"],
                from_block=raw["conditional_block"],
                to_block=raw["entry_block"],
                from_count=int(raw["profile_cnt"]),
            )
        elif kind != "indirect_target":
            raise FormatError(f"unknown compartment kind {kind!r} in report {where}")
        return Compartment(
            function=raw["function"],
            entry_block=raw["entry_block"],
            kind=kind,
            weight=weight,
            conditional=conditional,
            conditional_count=int(raw["profile_cnt"]),
            conditional_loc=raw["conditional"],
            entry_loc=raw["compartment"],
            labels=LabelSet.parse(raw["label"]),
            status=raw.get("status", "locked"),
            input_name=raw.get("input", ""),
            solution_name=raw.get("solution", ""),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed report {where}: {e}") from None


def parse_report(source: object) -> CompartmentReport:
    """Inverse of export_report; validates rank contiguity."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise FormatError(f"report is not valid JSON: {e}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise FormatError("report document must contain an 'entries' array")
    raw_cfg = doc.get("config", {})
    if not isinstance(raw_cfg, dict):
        raise FormatError("malformed report config")
    cfg = AnalysisConfig(
        max_exec_count=int(raw_cfg.get("max_exec_count", 50)),
        top_k=int(raw_cfg.get("top_k", 20)),
        roots=tuple(raw_cfg.get("roots", ())),
    )
    entries = []
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict) or raw.get("rank") != i + 1:
            raise FormatError(f"report ranks must be contiguous from 1 (entry {i})")
        entries.append(_doc_to_entry(raw, f"entry {i + 1}"))
    resolved = [
        _doc_to_entry(raw, f"resolved entry {i}")
        for i, raw in enumerate(doc.get("resolved", []))
    ]
    return CompartmentReport(
        config=cfg,
        snapshot_tag=doc.get("snapshot", ""),
        entries=tuple(entries),
        resolved=tuple(resolved),
    )


def _validate_columns(columns: tuple[str, ...]) -> None:
    for col in columns:
        if col not in COLUMNS:
            raise FormatError(f"unknown column {col!r}")


def _render_table(report: CompartmentReport, opts: RenderOptions) -> str:
    columns = opts.columns
    rows = [
        [_cell(i + 1, c, col) for col in columns]
        for i, c in enumerate(report.entries)
    ]
    cap = opts.max_col_width
    if cap > 0:
        rows = [[v if len(v) <= cap else v[: max(cap - 2, 1)] + ".." for v in row] for row in rows]
    widths = [
        max(len(columns[j]), *(len(row[j]) for row in rows)) if rows else len(columns[j])
        for j in range(len(columns))
    ]
    lines = [
        "  ".join(col.ljust(widths[j]) for j, col in enumerate(columns)).rstrip(),
        "  ".join("-" * widths[j] for j in range(len(columns))),
    ]
    for row in rows:
        cells = [
            row[j].rjust(widths[j]) if columns[j] in _NUMERIC else row[j].ljust(widths[j])
            for j in range(len(columns))
        ]
        lines.append("  ".join(cells).rstrip())
    return "".join(line + "\n" for line in lines)


def _render_csv(report: CompartmentReport, opts: RenderOptions) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(opts.columns)
    for i, c in enumerate(report.entries):
        writer.writerow([_cell(i + 1, c, col) for col in opts.columns])
    return buf.getvalue()


def render(report: CompartmentReport, opts: RenderOptions | None = None) -> str:
    """Deterministic text rendering of the ranked entries."""
    opts = opts or RenderOptions()
    _validate_columns(opts.columns)
    if opts.format == "table":
        return _render_table(report, opts)
    if opts.format == "csv":
        return _render_csv(report, opts)
    if opts.format == "json":
        return report_to_json(report)
    raise FormatError(f"unknown render format {opts.format!r}")
