"""Interprocedural control-flow graph: loading, dominator trees, call graph."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Mapping, Union

from .errors import AnalysisError, FormatError

Source = Union[str, bytes, IO[str], IO[bytes]]


def read_source(source: Source) -> str:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


@dataclass(frozen=True)
class CallSiteRecord:
    kind: str  # "direct" | "indirect"
    target: str = ""  # direct only
    site: str = ""  # indirect only


@dataclass(frozen=True)
class BasicBlockRecord:
    id: str
    size: int
    succs: tuple[str, ...] = ()
    loc: str = ""
    calls: tuple[CallSiteRecord, ...] = ()


@dataclass(frozen=True)
class FunctionRecord:
    name: str
    entry: str
    size: int
    blocks: tuple[BasicBlockRecord, ...]

    @cached_property
    def blocks_by_id(self) -> Mapping[str, BasicBlockRecord]:
        return {b.id: b for b in self.blocks}

    def block(self, block_id: str) -> BasicBlockRecord:
        try:
            return self.blocks_by_id[block_id]
        except KeyError:
            raise AnalysisError(f"unknown block {self.name}:{block_id}") from None


@dataclass(frozen=True)
class Icfg:
    functions: tuple[FunctionRecord, ...]

    @cached_property
    def functions_by_name(self) -> Mapping[str, FunctionRecord]:
        return {f.name: f for f in self.functions}

    @cached_property
    def indirect_sites(self) -> Mapping[str, tuple[str, str]]:
        """Indirect call site id -> (function, block) where it is declared."""
        sites: dict[str, tuple[str, str]] = {}
        for f in self.functions:
            for b in f.blocks:
                for call in b.calls:
                    if call.kind == "indirect":
                        sites[call.site] = (f.name, b.id)
        return sites

    def function(self, name: str) -> FunctionRecord:
        try:
            return self.functions_by_name[name]
        except KeyError:
            raise AnalysisError(f"unknown function {name}") from None

    def has_block(self, fn: str, block_id: str) -> bool:
        f = self.functions_by_name.get(fn)
        return f is not None and block_id in f.blocks_by_id


@dataclass(frozen=True)
class DynamicCallEdge:
    site: str
    caller: str
    target: str
    count: int


@dataclass(frozen=True)
class IndirectStats:
    total_call_sites: int
    indirect_call_sites: int
    discovered_targets: int


def _parse_call(raw: object, where: str) -> CallSiteRecord:
    if not isinstance(raw, dict):
        raise FormatError(f"malformed call record in {where}")
    kind = raw.get("kind")
    if kind == "direct":
        target = raw.get("target")
        if not isinstance(target, str) or not target:
            raise FormatError(f"direct call without target in {where}")
        return CallSiteRecord(kind="direct", target=target)
    if kind == "indirect":
        site = raw.get("site")
        if not isinstance(site, str) or not site:
            raise FormatError(f"indirect call without site in {where}")
        return CallSiteRecord(kind="indirect", site=site)
    raise FormatError(f"unknown call kind {kind!r} in {where}")


def _parse_block(raw: object, fn: str) -> BasicBlockRecord:
    if not isinstance(raw, dict) or not isinstance(raw.get("id"), str):
        raise FormatError(f"malformed block record in function {fn}")
    bid = raw["id"]
    where = f"{fn}:{bid}"
    size = raw.get("size")
    if not isinstance(size, int) or isinstance(size, bool):
        raise FormatError(f"missing or non-integer size for block {where}")
    if size < 1:
        raise FormatError(f"empty block {where} (size {size})")
    succs = raw.get("succs", [])
    if not isinstance(succs, list) or not all(isinstance(s, str) for s in succs):
        raise FormatError(f"malformed succs for block {where}")
    loc = raw.get("loc", "")
    if not isinstance(loc, str):
        raise FormatError(f"malformed loc for block {where}")
    calls = tuple(_parse_call(c, where) for c in raw.get("calls", []))
    return BasicBlockRecord(id=bid, size=size, succs=tuple(succs), loc=loc, calls=calls)


def parse_icfg_doc(doc: object) -> Icfg:
    """Validate a decoded icfg document; raises FormatError naming the offender."""
    if not isinstance(doc, dict) or not isinstance(doc.get("functions"), list):
        raise FormatError("icfg document must contain a 'functions' array")
    functions: list[FunctionRecord] = []
    seen_fn: set[str] = set()
    for raw_fn in doc["functions"]:
        if not isinstance(raw_fn, dict) or not isinstance(raw_fn.get("name"), str):
            raise FormatError("malformed function record (missing name)")
        name = raw_fn["name"]
        if name in seen_fn:
            raise FormatError(f"duplicate function {name}")
        seen_fn.add(name)
        size = raw_fn.get("size")
        if not isinstance(size, int) or isinstance(size, bool) or size < 0:
            raise FormatError(f"missing or negative size for function {name}")
        entry = raw_fn.get("entry")
        if not isinstance(entry, str) or not entry:
            raise FormatError(f"missing entry block for function {name}")
        raw_blocks = raw_fn.get("blocks")
        if not isinstance(raw_blocks, list) or not raw_blocks:
            raise FormatError(f"function {name} has no blocks")
        blocks: list[BasicBlockRecord] = []
        seen_blk: set[str] = set()
        for raw_blk in raw_blocks:
            blk = _parse_block(raw_blk, name)
            if blk.id in seen_blk:
                raise FormatError(f"duplicate block {name}:{blk.id}")
            seen_blk.add(blk.id)
            blocks.append(blk)
        if entry not in seen_blk:
            raise FormatError(f"entry {entry} not a block of function {name}")
        total = sum(b.size for b in blocks)
        if total != size:
            raise FormatError(f"size mismatch {name}: declared {size}, blocks total {total}")
        functions.append(FunctionRecord(name=name, entry=entry, size=size, blocks=tuple(blocks)))

    icfg = Icfg(functions=tuple(functions))

    # Cross-reference checks need the whole graph assembled first.
    sites: dict[str, str] = {}
    for f in icfg.functions:
        for b in f.blocks:
            seen_succ: set[str] = set()
            for s in b.succs:
                if s in seen_succ:
                    raise FormatError(f"duplicate successor {f.name}:{b.id}->{s}")
                seen_succ.add(s)
                if s not in f.blocks_by_id:
                    raise FormatError(f"dangling successor {f.name}:{b.id}->{s}")
            for call in b.calls:
                if call.kind == "direct":
                    if call.target not in icfg.functions_by_name:
                        raise FormatError(
                            f"dangling call target {f.name}:{b.id}->{call.target}"
                        )
                else:
                    prev = sites.get(call.site)
                    if prev is not None:
                        raise FormatError(
                            f"duplicate indirect site {call.site} ({prev} and {f.name}:{b.id})"
                        )
                    sites[call.site] = f"{f.name}:{b.id}"
    return icfg


def load_icfg(source: Source) -> Icfg:
    """Parse and validate an icfg document from text, bytes, or a stream."""
    text = read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"icfg is not valid JSON: {e}") from None
    return parse_icfg_doc(doc)


# ---------------------------------------------------------------------------
# Dominator trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DominatorTree:
    function: str
    entry: str
    idom: Mapping[str, str]  # reachable non-entry block -> immediate dominator
    children: Mapping[str, tuple[str, ...]]
    unreachable: tuple[str, ...]

    def __contains__(self, block_id: str) -> bool:
        return block_id == self.entry or block_id in self.idom

    def descendants(self, block_id: str) -> list[str]:
        """All blocks strictly below block_id, preorder."""
        out: list[str] = []
        stack = list(reversed(self.children.get(block_id, ())))
        while stack:
            b = stack.pop()
            out.append(b)
            stack.extend(reversed(self.children.get(b, ())))
        return out


def build_dominator_tree(f: FunctionRecord) -> DominatorTree:
    """Iterative dataflow dominator computation over reachable blocks.

    Unreachable blocks are excluded from the tree and listed separately so
    callers can surface them as diagnostics.
    """
    preds: dict[str, list[str]] = {b.id: [] for b in f.blocks}
    for b in f.blocks:
        for s in b.succs:
            preds[s].append(b.id)

    # Reverse postorder over reachable blocks, iterative DFS.
    order: list[str] = []
    state: dict[str, int] = {}
    stack: list[tuple[str, int]] = [(f.entry, 0)]
    while stack:
        node, i = stack.pop()
        if i == 0:
            if node in state:
                continue
            state[node] = 1
        succs = f.block(node).succs
        if i < len(succs):
            stack.append((node, i + 1))
            if succs[i] not in state:
                stack.append((succs[i], 0))
        else:
            order.append(node)
    rpo = list(reversed(order))
    rpo_index = {b: i for i, b in enumerate(rpo)}
    reachable = set(rpo)

    idom: dict[str, str] = {f.entry: f.entry}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while rpo_index[a] > rpo_index[b]:
                a = idom[a]
            while rpo_index[b] > rpo_index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo:
            if b == f.entry:
                continue
            candidates = [p for p in preds[b] if p in idom]
            new = candidates[0]
            for p in candidates[1:]:
                new = intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    del idom[f.entry]

    children: dict[str, list[str]] = {}
    for b, d in idom.items():
        children.setdefault(d, []).append(b)
    for lst in children.values():
        lst.sort()
    unreachable = tuple(sorted(b.id for b in f.blocks if b.id not in reachable))
    return DominatorTree(
        function=f.name,
        entry=f.entry,
        idom=idom,
        children={k: tuple(v) for k, v in children.items()},
        unreachable=unreachable,
    )


class DominatorForest:
    """Caches per-function dominator trees for one Icfg."""

    def __init__(self, icfg: Icfg):
        self._icfg = icfg
        self._trees: dict[str, DominatorTree] = {}

    def get(self, fn: str) -> DominatorTree:
        tree = self._trees.get(fn)
        if tree is None:
            tree = build_dominator_tree(self._icfg.function(fn))
            self._trees[fn] = tree
        return tree


# ---------------------------------------------------------------------------
# Call graph
# ---------------------------------------------------------------------------

# Incoming call sites are identified so that distinct syntactic sites stay
# distinct: direct sites by (caller, block, position), indirect sites by id.
SiteKey = tuple


@dataclass(frozen=True)
class CallGraph:
    icfg: Icfg
    bindings: Mapping[str, tuple[str, ...]]  # indirect site -> observed targets
    incoming: Mapping[str, frozenset]  # function -> incoming SiteKeys
    edges: tuple[DynamicCallEdge, ...]  # normalized dynamic edges

    def caller_count(self, fn: str) -> int:
        return len(self.incoming.get(fn, frozenset()))

    def direct_caller_count(self, fn: str) -> int:
        return sum(1 for key in self.incoming.get(fn, frozenset()) if key[0] == "direct")

    def calls_from_block(self, fn: str, block_id: str) -> list[str]:
        """Callees of one block, indirect sites expanded to observed targets."""
        out: list[str] = []
        for call in self.icfg.function(fn).block(block_id).calls:
            if call.kind == "direct":
                out.append(call.target)
            else:
                out.extend(self.bindings.get(call.site, ()))
        return out

    def callees(self, fn: str) -> list[str]:
        out: list[str] = []
        for b in self.icfg.function(fn).blocks:
            out.extend(self.calls_from_block(fn, b.id))
        return out


def augment_call_graph(icfg: Icfg, edges: Iterable[DynamicCallEdge]) -> CallGraph:
    """Join the static call graph with dynamically observed indirect edges.

    Observed (site, target) pairs are deduplicated and their counts
    accumulated, so re-applying a call graph's own edge set is a fixed point.
    """
    merged: dict[tuple[str, str], tuple[str, int]] = {}
    for e in edges:
        loc = icfg.indirect_sites.get(e.site)
        if loc is None:
            raise AnalysisError(f"unknown indirect site {e.site}")
        if e.target not in icfg.functions_by_name:
            raise AnalysisError(f"unknown call target {e.target}")
        if e.caller != loc[0]:
            raise AnalysisError(f"site {e.site} belongs to {loc[0]}, not {e.caller}")
        if e.count < 1:
            raise FormatError(f"non-positive count on dynamic edge {e.site}->{e.target}")
        key = (e.site, e.target)
        prev = merged.get(key)
        merged[key] = (e.caller, e.count if prev is None else prev[1] + e.count)

    bindings: dict[str, list[str]] = {}
    incoming: dict[str, set] = {f.name: set() for f in icfg.functions}
    for f in icfg.functions:
        for b in f.blocks:
            for i, call in enumerate(b.calls):
                if call.kind == "direct":
                    incoming[call.target].add(("direct", f.name, b.id, i))
    for (site, target), (caller, _count) in merged.items():
        bindings.setdefault(site, []).append(target)
        incoming[target].add(("indirect", site))
    normalized = tuple(
        DynamicCallEdge(site=site, caller=caller, target=target, count=count)
        for (site, target), (caller, count) in sorted(merged.items())
    )
    return CallGraph(
        icfg=icfg,
        bindings={site: tuple(sorted(ts)) for site, ts in bindings.items()},
        incoming={fn: frozenset(keys) for fn, keys in incoming.items()},
        edges=normalized,
    )


def indirect_call_summary(icfg: Icfg, edges: Iterable[DynamicCallEdge]) -> IndirectStats:
    cg = augment_call_graph(icfg, edges)
    total = sum(len(b.calls) for f in icfg.functions for b in f.blocks)
    return IndirectStats(
        total_call_sites=total,
        indirect_call_sites=len(icfg.indirect_sites),
        discovered_targets=len(cg.edges),
    )


# ---------------------------------------------------------------------------
# Call graph log wire format (one JSON record per line)
# ---------------------------------------------------------------------------


def load_callgraph_log(source: Source) -> list[DynamicCallEdge]:
    text = read_source(source)
    out: list[DynamicCallEdge] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise FormatError(f"malformed callgraph record at line {lineno}") from None
        if not isinstance(rec, dict):
            raise FormatError(f"malformed callgraph record at line {lineno}")
        site, caller, target = rec.get("site"), rec.get("caller"), rec.get("target")
        count = rec.get("count")
        if not all(isinstance(x, str) and x for x in (site, caller, target)):
            raise FormatError(f"malformed callgraph record at line {lineno}")
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise FormatError(f"non-positive count at line {lineno}")
        out.append(DynamicCallEdge(site=site, caller=caller, target=target, count=count))
    return out


def dump_callgraph_log(edges: Iterable[DynamicCallEdge]) -> str:
    lines = [
        json.dumps(
            {"site": e.site, "caller": e.caller, "target": e.target, "count": e.count}
        )
        for e in sorted(edges, key=lambda e: (e.site, e.caller, e.target))
    ]
    return "".join(line + "\n" for line in lines)
