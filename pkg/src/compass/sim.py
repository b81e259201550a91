"""Deterministic toy-target interpreter and mutational fuzzing loop.

The target format is the icfg document extended with per-block "guard"
expressions over the input bytes and harness flags, and per indirect call
site a dispatch "table" keyed by one input byte. Executing a target yields
the same logs a real campaign would: block counts, indirect call edges,
taint labels, and per-input coverage.

Reproducibility contract: all randomness comes from a splitmix64 generator
seeded by FuzzRunConfig.rng_seed, the loop is single-threaded, and every
serialized output is sorted, so identical configs give bit-identical logs
on any platform.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .coverage import ProfileSnapshot
from .errors import FormatError
from .evaluation import InputCoverage
from .icfg import DynamicCallEdge, Icfg, Source, parse_icfg_doc, read_source
from .labels import HARNESS, INPUT, LabelMap, LabelSet

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 (Steele et al.); tiny, fully specified, platform-independent."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n


@dataclass(frozen=True)
class Guard:
    kind: str  # "bytes" | "flag" | "len_ge"
    offset: int = 0
    value: bytes = b""
    bit: int = 0
    n: int = 0

    def evaluate(self, data: bytes, flags: int) -> bool:
        if self.kind == "bytes":
            return data[self.offset : self.offset + len(self.value)] == self.value
        if self.kind == "flag":
            return bool((flags >> self.bit) & 1)
        return len(data) >= self.n

    def labels(self) -> LabelSet:
        # Honest provenance: byte and length guards read the mutated input,
        # flag guards read harness state.
        if self.kind == "flag":
            return LabelSet(frozenset({HARNESS}))
        return LabelSet(frozenset({INPUT}))


@dataclass(frozen=True)
class DispatchTable:
    site: str
    offset: int
    table: Mapping[int, str]  # input byte value -> target function


@dataclass(frozen=True)
class SimTargetSpec:
    icfg: Icfg
    guards: Mapping[tuple[str, str], Guard]
    tables: Mapping[str, DispatchTable]
    main: str  # execution starts at this function's entry


@dataclass(frozen=True)
class ExecutionTrace:
    hits: Mapping[tuple[str, str], int]
    indirect_calls: Mapping[tuple[str, str, str], int]  # (site, caller, target)
    labels: Mapping[tuple[str, str], LabelSet]
    truncated: bool

    @property
    def covered(self) -> frozenset:
        return frozenset(self.hits)


@dataclass(frozen=True)
class FuzzRunConfig:
    seeds: tuple[bytes, ...]
    harness_flags: int = 0
    iterations: int = 1000
    rng_seed: int = 0
    step_budget: int = 10000


@dataclass(frozen=True)
class SimFuzzResult:
    profile: ProfileSnapshot
    queue: tuple[tuple[str, bytes], ...]
    call_edges: tuple[DynamicCallEdge, ...]
    labels: LabelMap
    per_input: tuple[InputCoverage, ...]
    executed: tuple[bytes, ...]  # every input run, in order; not serialized


def _parse_guard(raw: object, where: str) -> Guard:
    if not isinstance(raw, dict):
        raise FormatError(f"malformed guard at {where}")
    kind = raw.get("kind")
    if kind == "bytes":
        offset, value = raw.get("offset"), raw.get("value")
        if not isinstance(offset, int) or offset < 0 or not isinstance(value, str):
            raise FormatError(f"malformed bytes guard at {where}")
        try:
            decoded = bytes.fromhex(value)
        except ValueError:
            raise FormatError(f"guard value is not hex at {where}") from None
        if not decoded:
            raise FormatError(f"empty guard value at {where}")
        return Guard(kind="bytes", offset=offset, value=decoded)
    if kind == "flag":
        bit = raw.get("bit")
        if not isinstance(bit, int) or not 0 <= bit < 64:
            raise FormatError(f"flag guard bit out of range at {where}")
        return Guard(kind="flag", bit=bit)
    if kind == "len_ge":
        n = raw.get("n")
        if not isinstance(n, int) or n < 0:
            raise FormatError(f"malformed len_ge guard at {where}")
        return Guard(kind="len_ge", n=n)
    raise FormatError(f"unknown guard kind {kind!r} at {where}")


def load_sim_spec(source: Source) -> SimTargetSpec:
    """Parse a sim-target document; the icfg part is validated as usual."""
    text = read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"sim spec is not valid JSON: {e}") from None
    icfg = parse_icfg_doc(doc)
    guards: dict[tuple[str, str], Guard] = {}
    tables: dict[str, DispatchTable] = {}
    known_functions = set(icfg.functions_by_name)
    for raw_fn in doc["functions"]:
        fn = raw_fn["name"]
        for raw_blk in raw_fn["blocks"]:
            where = f"{fn}:{raw_blk['id']}"
            if "guard" in raw_blk:
                if not 1 <= len(raw_blk.get("succs", [])) <= 2:
                    raise FormatError(f"guarded block needs 1 or 2 successors at {where}")
                guards[(fn, raw_blk["id"])] = _parse_guard(raw_blk["guard"], where)
            for raw_call in raw_blk.get("calls", []):
                if raw_call.get("kind") != "indirect" or "table" not in raw_call:
                    continue
                site = raw_call["site"]
                offset = raw_call.get("offset")
                raw_table = raw_call["table"]
                if not isinstance(offset, int) or offset < 0 or not isinstance(raw_table, dict):
                    raise FormatError(f"malformed dispatch table at {where}")
                table: dict[int, str] = {}
                for key, target in raw_table.items():
                    try:
                        byte = int(key, 16)
                    except ValueError:
                        raise FormatError(f"dispatch key {key!r} is not hex at {where}") from None
                    if not 0 <= byte < 256:
                        raise FormatError(f"dispatch key {key!r} out of range at {where}")
                    if target not in known_functions:
                        raise FormatError(f"dispatch target {target!r} unknown at {where}")
                    table[byte] = target
                tables[site] = DispatchTable(site=site, offset=offset, table=table)
    return SimTargetSpec(
        icfg=icfg, guards=guards, tables=tables, main=icfg.functions[0].name
    )


@dataclass
class _Frame:
    fn: str
    block: str | None
    call_index: int = 0
    entered: bool = False


def execute(
    spec: SimTargetSpec, data: bytes, flags: int = 0, step_budget: int = 10000
) -> ExecutionTrace:
    """Walk the target once: guards pick successors, calls descend, loops are
    bounded by the step budget (trace is still returned, flagged truncated)."""
    hits: dict[tuple[str, str], int] = {}
    indirect: dict[tuple[str, str, str], int] = {}
    labels: dict[tuple[str, str], LabelSet] = {}
    steps = 0
    truncated = False
    stack = [_Frame(fn=spec.main, block=spec.icfg.function(spec.main).entry)]
    while stack:
        frame = stack[-1]
        if frame.block is None:
            stack.pop()
            continue
        fn = spec.icfg.function(frame.fn)
        blk = fn.block(frame.block)
        key = (frame.fn, frame.block)
        if not frame.entered:
            if steps >= step_budget:
                truncated = True
                break
            steps += 1
            frame.entered = True
            hits[key] = hits.get(key, 0) + 1
            guard = spec.guards.get(key)
            if guard is not None:
                labels[key] = labels.get(key, LabelSet()).union(guard.labels())
        if frame.call_index < len(blk.calls):
            call = blk.calls[frame.call_index]
            frame.call_index += 1
            target = None
            if call.kind == "direct":
                target = call.target
            else:
                dispatch = spec.tables.get(call.site)
                if dispatch is not None and dispatch.offset < len(data):
                    target = dispatch.table.get(data[dispatch.offset])
                    if target is not None:
                        ikey = (call.site, frame.fn, target)
                        indirect[ikey] = indirect.get(ikey, 0) + 1
            if target is not None:
                stack.append(_Frame(fn=target, block=spec.icfg.function(target).entry))
            continue
        # Calls done; pick the successor.
        guard = spec.guards.get(key)
        if guard is not None:
            taken = guard.evaluate(data, flags)
            if taken:
                nxt = blk.succs[0]
            else:
                nxt = blk.succs[1] if len(blk.succs) > 1 else None
        else:
            nxt = blk.succs[0] if blk.succs else None
        frame.block = nxt
        frame.call_index = 0
        frame.entered = False
    return ExecutionTrace(
        hits=hits, indirect_calls=indirect, labels=labels, truncated=truncated
    )


def _flip_bit(data: bytes, rng: SplitMix64) -> bytes:
    if not data:
        return data
    pos = rng.below(len(data) * 8)
    out = bytearray(data)
    out[pos // 8] ^= 1 << (pos % 8)
    return bytes(out)


def _replace_byte(data: bytes, rng: SplitMix64) -> bytes:
    if not data:
        return data
    pos = rng.below(len(data))
    out = bytearray(data)
    out[pos] = rng.below(256)
    return bytes(out)


def _dup_or_delete(data: bytes, rng: SplitMix64) -> bytes:
    if not data:
        return data
    i = rng.below(len(data))
    j = i + 1 + rng.below(len(data) - i)
    if rng.below(2) == 0:
        return data[:j] + data[i:j] + data[j:]
    return data[:i] + data[j:]


def _splice(data: bytes, other: bytes, rng: SplitMix64) -> bytes:
    cut_a = rng.below(len(data) + 1)
    cut_b = rng.below(len(other) + 1)
    return data[:cut_a] + other[cut_b:]


def sim_fuzz(spec: SimTargetSpec, cfg: FuzzRunConfig) -> SimFuzzResult:
    """Coverage-guided mutational loop over the toy target.

    Mutators: bit flip, byte replace, block duplicate/delete, two-input
    splice. Parents are picked round-robin from the queue; an input is
    admitted iff it covers a block nothing covered before. The profile
    accumulates over every executed input, admitted or not.
    """
    if not cfg.seeds:
        raise FormatError("sim_fuzz requires at least one seed")
    profile: dict[tuple[str, str], int] = {}
    call_counts: dict[tuple[str, str, str], int] = {}
    label_map: dict[tuple[str, str], LabelSet] = {}
    covered_ever: set[tuple[str, str]] = set()
    queue: list[tuple[str, bytes]] = []
    per_input: list[InputCoverage] = []
    executed: list[bytes] = []
    rng = SplitMix64(cfg.rng_seed)

    def run(name: str, data: bytes) -> None:
        executed.append(data)
        trace = execute(spec, data, cfg.harness_flags, cfg.step_budget)
        for key, n in trace.hits.items():
            profile[key] = profile.get(key, 0) + n
        for key, n in trace.indirect_calls.items():
            call_counts[key] = call_counts.get(key, 0) + n
        for key, ls in trace.labels.items():
            label_map[key] = label_map.get(key, LabelSet()).union(ls)
        new_blocks = trace.covered - covered_ever
        if new_blocks:
            covered_ever.update(new_blocks)
            queue.append((name, data))
            per_input.append(InputCoverage(input_name=name, covered=trace.covered))

    for i, seed in enumerate(cfg.seeds):
        run(f"seed_{i:03d}", seed)
    for it in range(cfg.iterations):
        if not queue:  # only possible with a zero step budget
            break
        parent = queue[it % len(queue)][1]
        kind = rng.below(4)
        if kind == 0:
            child = _flip_bit(parent, rng)
        elif kind == 1:
            child = _replace_byte(parent, rng)
        elif kind == 2:
            child = _dup_or_delete(parent, rng)
        else:
            child = _splice(parent, queue[rng.below(len(queue))][1], rng)
        run(f"mut_{it:06d}", child)

    edges = tuple(
        DynamicCallEdge(site=site, caller=caller, target=target, count=count)
        for (site, caller, target), count in sorted(call_counts.items())
    )
    return SimFuzzResult(
        profile=ProfileSnapshot(counts=profile, label="sim"),
        queue=tuple(queue),
        call_edges=edges,
        labels=LabelMap(entries=label_map),
        per_input=tuple(per_input),
        executed=tuple(executed),
    )
