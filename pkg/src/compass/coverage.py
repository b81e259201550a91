"""Execution-count profiles and the coverage frontier."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import AnalysisError, FormatError
from .icfg import Icfg, Source, read_source

U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class ProfileSnapshot:
    """Cumulative per-block execution counts; absent keys mean zero."""

    counts: Mapping[tuple[str, str], int] = field(default_factory=dict)
    label: str = ""

    def count(self, fn: str, block_id: str) -> int:
        return self.counts.get((fn, block_id), 0)


@dataclass(frozen=True)
class AnalysisConfig:
    max_exec_count: int = 50  # saturation threshold: counts above it are "explored"
    top_k: int = 20
    roots: tuple[str, ...] = ()  # harness entry points, never compartment candidates

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise FormatError("top_k must be >= 1")
        if self.max_exec_count < 0:
            raise FormatError("max_exec_count must be >= 0")


@dataclass(frozen=True)
class FrontierEdge:
    function: str
    from_block: str  # covered conditional
    to_block: str  # under-covered successor
    from_count: int


def load_profile(source: Source, tag: str = "") -> ProfileSnapshot:
    """Parse the profile wire format (one JSON record per line)."""
    text = read_source(source)
    counts: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise FormatError(f"malformed profile record at line {lineno}") from None
        if not isinstance(rec, dict):
            raise FormatError(f"malformed profile record at line {lineno}")
        fn, block, count = rec.get("fn"), rec.get("block"), rec.get("count")
        if not isinstance(fn, str) or not isinstance(block, str) or not fn or not block:
            raise FormatError(f"malformed profile record at line {lineno}")
        if not isinstance(count, int) or isinstance(count, bool):
            raise FormatError(f"malformed profile record at line {lineno}")
        if count < 0:
            raise FormatError(f"negative count at line {lineno}")
        key = (fn, block)
        total = counts.get(key, 0) + count
        if total > U64_MAX:
            raise FormatError(f"count overflow for {fn}:{block} at line {lineno}")
        counts[key] = total
    return ProfileSnapshot(counts=counts, label=tag)


def dump_profile(snapshot: ProfileSnapshot) -> str:
    lines = [
        json.dumps({"fn": fn, "block": block, "count": count})
        for (fn, block), count in sorted(snapshot.counts.items())
    ]
    return "".join(line + "\n" for line in lines)


def _merge_tags(a: str, b: str) -> str:
    parts = (set(a.split("+")) | set(b.split("+"))) - {""}
    return "+".join(sorted(parts))


def merge_profiles(a: ProfileSnapshot, b: ProfileSnapshot) -> ProfileSnapshot:
    """Pointwise sum; commutative and associative, overflow is an error."""
    counts = dict(a.counts)
    for key, count in b.counts.items():
        total = counts.get(key, 0) + count
        if total > U64_MAX:
            raise FormatError(f"count overflow for {key[0]}:{key[1]} in merge")
        counts[key] = total
    return ProfileSnapshot(counts=counts, label=_merge_tags(a.label, b.label))


def validate_profile(icfg: Icfg, snapshot: ProfileSnapshot) -> None:
    """Reject profile keys the Icfg does not know (icfg/profile version skew)."""
    for fn, block in sorted(snapshot.counts):
        if not icfg.has_block(fn, block):
            raise AnalysisError(f"profile references unknown block {fn}:{block}")


def entry_count(snapshot: ProfileSnapshot, icfg: Icfg, fn: str) -> int:
    return snapshot.count(fn, icfg.function(fn).entry)


def coverage_frontier(
    icfg: Icfg, snapshot: ProfileSnapshot, cfg: AnalysisConfig
) -> list[FrontierEdge]:
    """All intraprocedural edges from a saturated block to an under-covered one."""
    validate_profile(icfg, snapshot)
    theta = cfg.max_exec_count
    edges: list[FrontierEdge] = []
    for f in icfg.functions:
        for b in f.blocks:
            from_count = snapshot.count(f.name, b.id)
            if from_count <= theta:
                continue
            for s in b.succs:
                if snapshot.count(f.name, s) <= theta:
                    edges.append(
                        FrontierEdge(
                            function=f.name,
                            from_block=b.id,
                            to_block=s,
                            from_count=from_count,
                        )
                    )
    edges.sort(key=lambda e: (e.function, e.from_block, e.to_block))
    return edges
