"""Taint provenance labels for compartment-blocking conditionals."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

from .errors import FormatError
from .icfg import Source, read_source

if TYPE_CHECKING:
    from .compartments import CompartmentReport

INPUT = "input"
HARNESS = "harness"
_VALID = (INPUT, HARNESS)


@dataclass(frozen=True)
class LabelSet:
    flags: frozenset = frozenset()

    def render(self) -> str:
        # I before H; empty string means unlabeled.
        return ("I" if INPUT in self.flags else "") + ("H" if HARNESS in self.flags else "")

    def union(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.flags | other.flags)

    @classmethod
    def of(cls, *names: str) -> "LabelSet":
        for n in names:
            if n not in _VALID:
                raise FormatError(f"unknown label {n!r}")
        return cls(frozenset(names))

    @classmethod
    def parse(cls, rendered: str) -> "LabelSet":
        flags = set()
        for ch in rendered:
            if ch == "I":
                flags.add(INPUT)
            elif ch == "H":
                flags.add(HARNESS)
            else:
                raise FormatError(f"unknown label marker {ch!r}")
        return cls(frozenset(flags))


@dataclass(frozen=True)
class LabelMap:
    entries: Mapping[tuple[str, str], LabelSet] = field(default_factory=dict)

    def get(self, fn: str, block_id: str) -> LabelSet:
        return self.entries.get((fn, block_id), LabelSet())


def load_labels(source: Source) -> LabelMap:
    """Parse the label log (one JSON record per line), accumulating by union."""
    text = read_source(source)
    entries: dict[tuple[str, str], LabelSet] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise FormatError(f"malformed label record at line {lineno}") from None
        if not isinstance(rec, dict):
            raise FormatError(f"malformed label record at line {lineno}")
        fn, block, names = rec.get("fn"), rec.get("block"), rec.get("labels")
        if not isinstance(fn, str) or not isinstance(block, str) or not isinstance(names, list):
            raise FormatError(f"malformed label record at line {lineno}")
        for n in names:
            if n not in _VALID:
                raise FormatError(f"unknown label {n!r} at line {lineno}")
        key = (fn, block)
        entries[key] = entries.get(key, LabelSet()).union(LabelSet(frozenset(names)))
    return LabelMap(entries=entries)


def dump_labels(label_map: LabelMap) -> str:
    lines = [
        json.dumps({"fn": fn, "block": block, "labels": sorted(ls.flags)})
        for (fn, block), ls in sorted(label_map.entries.items())
    ]
    return "".join(line + "\n" for line in lines)


def annotate(report: "CompartmentReport", labels: LabelMap) -> "CompartmentReport":
    """Attach each frontier compartment's conditional labels; idempotent.

    Indirect-target compartments have no blocking conditional and stay
    unlabeled. Every non-label field is untouched.
    """

    def relabel(c):
        if c.kind != "frontier" or c.conditional is None:
            return replace(c, labels=LabelSet())
        return replace(c, labels=labels.get(c.function, c.conditional.from_block))

    return replace(
        report,
        entries=tuple(relabel(c) for c in report.entries),
        resolved=tuple(relabel(c) for c in report.resolved),
    )
