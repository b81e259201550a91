"""Attribute corpus inputs and candidate seeds to compartments."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

from .compartments import Compartment, CompartmentReport
from .errors import FormatError
from .icfg import Source, read_source


@dataclass(frozen=True)
class InputCoverage:
    input_name: str
    covered: frozenset  # of (function, block_id)

    def covers(self, fn: str, block_id: str) -> bool:
        return (fn, block_id) in self.covered


@dataclass(frozen=True)
class CompartmentOutcome:
    compartment_id: str
    reaches_conditional: bool
    unlocks_entry: bool


@dataclass(frozen=True)
class CandidateEvaluation:
    input_name: str
    outcomes: tuple[CompartmentOutcome, ...]

    def unlocked_ids(self) -> list[str]:
        return [o.compartment_id for o in self.outcomes if o.unlocks_entry]


def parse_manifest_record(rec: object, where: str = "manifest record") -> InputCoverage:
    if not isinstance(rec, dict):
        raise FormatError(f"malformed {where}")
    name = rec.get("input")
    covered = rec.get("covered")
    if not isinstance(name, str) or not name or not isinstance(covered, list):
        raise FormatError(f"malformed {where}")
    keys = set()
    for item in covered:
        if (
            not isinstance(item, dict)
            or not isinstance(item.get("fn"), str)
            or not isinstance(item.get("block"), str)
        ):
            raise FormatError(f"malformed coverage entry in {where}")
        keys.add((item["fn"], item["block"]))
    return InputCoverage(input_name=name, covered=frozenset(keys))


def load_coverage_manifest(source: Source) -> list[InputCoverage]:
    """Parse the per-input coverage manifest (one JSON record per line)."""
    text = read_source(source)
    out: list[InputCoverage] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise FormatError(f"malformed manifest record at line {lineno}") from None
        out.append(parse_manifest_record(rec, f"manifest record at line {lineno}"))
    return out


def dump_coverage_manifest(entries: Iterable[InputCoverage]) -> str:
    lines = []
    for e in entries:
        covered = [{"fn": fn, "block": block} for fn, block in sorted(e.covered)]
        lines.append(json.dumps({"input": e.input_name, "covered": covered}))
    return "".join(line + "\n" for line in lines)


def _attribute_one(c: Compartment, corpus: list[InputCoverage]) -> Compartment:
    input_name = ""
    solution_name = ""
    if c.kind == "frontier" and c.conditional is not None:
        for cov in corpus:
            if cov.covers(c.function, c.conditional.from_block):
                input_name = cov.input_name
                break
    for cov in corpus:
        if cov.covers(c.function, c.entry_block):
            solution_name = cov.input_name
            break
    return replace(c, input_name=input_name, solution_name=solution_name)


def attribute_corpus(
    report: CompartmentReport, corpus: Iterable[InputCoverage]
) -> CompartmentReport:
    """Fill Input/Solution columns from the first matching corpus input.

    Corpus order decides ties; indirect-target compartments only ever get a
    Solution (there is no conditional to reach).
    """
    corpus = list(corpus)
    return replace(
        report,
        entries=tuple(_attribute_one(c, corpus) for c in report.entries),
    )


def evaluate_candidate(
    report: CompartmentReport, candidate: InputCoverage
) -> CandidateEvaluation:
    """Which compartments does this input reach, and which does it unlock?"""
    outcomes = []
    for c in report.entries:
        reaches = (
            c.kind == "frontier"
            and c.conditional is not None
            and candidate.covers(c.function, c.conditional.from_block)
        )
        unlocks = candidate.covers(c.function, c.entry_block)
        outcomes.append(
            CompartmentOutcome(
                compartment_id=c.id,
                reaches_conditional=reaches,
                unlocks_entry=unlocks,
            )
        )
    return CandidateEvaluation(input_name=candidate.input_name, outcomes=tuple(outcomes))
