"""Compartment enumeration, weighting, ranking, what-if analysis, stability.

A compartment's weight is an upper bound on the new coverage unlocking it can
yield: the instructions the entry block dominates within its function, plus
the instructions of every function uniquely reachable from those blocks. A
callee counts only while it is unsaturated (entry count <= threshold) and has
at most one incoming call site; each function's size is counted at most once
per compartment via a shared visited set.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .coverage import AnalysisConfig, FrontierEdge, ProfileSnapshot, coverage_frontier
from .errors import AnalysisError
from .icfg import CallGraph, DominatorForest, DominatorTree, Icfg
from .labels import LabelSet


@dataclass(frozen=True)
class WeightBreakdown:
    block_weight: int
    calls_weight: int

    def __post_init__(self) -> None:
        if self.block_weight < 0 or self.calls_weight < 0:
            raise AnalysisError("negative weight component")

    @property
    def total(self) -> int:
        return self.block_weight + self.calls_weight


@dataclass(frozen=True)
class Compartment:
    function: str
    entry_block: str
    kind: str  # "frontier" | "indirect_target"
    weight: WeightBreakdown
    conditional: FrontierEdge | None
    conditional_count: int
    conditional_loc: str
    entry_loc: str
    labels: LabelSet
    status: str = "locked"  # locked | unlocked | resolved
    input_name: str = ""  # first corpus input reaching the conditional
    solution_name: str = ""  # first corpus input covering the entry block

    @property
    def id(self) -> str:
        return f"{self.function}:{self.entry_block}"

    @property
    def conditional_block(self) -> str:
        return self.conditional.from_block if self.conditional else ""


@dataclass(frozen=True)
class CompartmentReport:
    config: AnalysisConfig
    snapshot_tag: str
    entries: tuple[Compartment, ...]  # rank-ordered, still locked
    resolved: tuple[Compartment, ...] = ()  # resolved/unlocked, action order

    def find(self, compartment_id: str) -> Compartment | None:
        for c in (*self.entries, *self.resolved):
            if c.id == compartment_id:
                return c
        return None


@dataclass(frozen=True)
class OverlapResult:
    overlap: int
    k: int
    truncated: bool  # k exceeded one of the report lengths


@dataclass(frozen=True)
class StabilityResult:
    still_locked: int | None = None
    entries: int | None = None
    overlap: OverlapResult | None = None


def _unique_callee_closure(
    fn: str,
    visited: set[str],
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    theta: int,
) -> list[str]:
    """Functions whose whole size counts toward the compartment.

    Depth-first over the call graph; a function is barred (and stops the
    descent) once saturated or once reachable through more than one call
    site. The visited set is shared across the entire compartment so no
    function contributes twice.
    """
    counted: list[str] = []
    stack = [fn]
    while stack:
        name = stack.pop()
        if name in visited:
            continue
        visited.add(name)
        rec = cg.icfg.function(name)
        if snapshot.count(name, rec.entry) > theta or cg.caller_count(name) > 1:
            continue
        counted.append(name)
        stack.extend(cg.callees(name))
    return counted


def calls_weight(
    fn: str,
    visited: set[str],
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    theta: int,
) -> int:
    return sum(
        cg.icfg.function(name).size
        for name in _unique_callee_closure(fn, visited, cg, snapshot, theta)
    )


def block_weight(
    dt: DominatorTree,
    block_id: str,
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    theta: int,
) -> WeightBreakdown:
    """Weight of the compartment rooted at block_id.

    Zero once the block itself is saturated. Otherwise the block component
    sums the block and all its dominator-tree descendants, and the calls
    component sums uniquely reachable callees of those blocks.
    """
    fn = dt.function
    if block_id not in dt:
        raise AnalysisError(f"block {fn}:{block_id} unreachable from entry")
    if snapshot.count(fn, block_id) > theta:
        return WeightBreakdown(0, 0)
    rec = cg.icfg.function(fn)
    blocks = [block_id, *dt.descendants(block_id)]
    block_component = sum(rec.block(b).size for b in blocks)
    visited: set[str] = set()
    calls_component = 0
    for b in blocks:
        for callee in cg.calls_from_block(fn, b):
            calls_component += calls_weight(callee, visited, cg, snapshot, theta)
    return WeightBreakdown(block_component, calls_component)


def unlock_footprint(
    dt: DominatorTree,
    block_id: str,
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    theta: int,
) -> set[tuple[str, str]]:
    """Blocks that hypothetically become covered when the compartment unlocks:
    the entry, its dominator descendants, and every block of each uniquely
    reachable callee."""
    fn = dt.function
    if block_id not in dt or snapshot.count(fn, block_id) > theta:
        return set()
    blocks = [block_id, *dt.descendants(block_id)]
    keys = {(fn, b) for b in blocks}
    visited: set[str] = set()
    for b in blocks:
        for callee in cg.calls_from_block(fn, b):
            for name in _unique_callee_closure(callee, visited, cg, snapshot, theta):
                for blk in cg.icfg.function(name).blocks:
                    keys.add((name, blk.id))
    return keys


def enumerate_candidates(
    icfg: Icfg,
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    cfg: AnalysisConfig,
) -> list[Compartment]:
    """Unweighted candidates: frontier successors plus under-covered entries
    of functions with no incoming direct call site (dispatch-table targets).

    Multiple frontier edges into one entry collapse to a single candidate
    keeping the hottest conditional. Root functions and blocks unreachable
    from their function entry never become candidates.
    """
    reachable_cache: dict[str, set[str]] = {}

    def reachable(fn: str) -> set[str]:
        seen = reachable_cache.get(fn)
        if seen is None:
            f = icfg.function(fn)
            seen = set()
            stack = [f.entry]
            while stack:
                b = stack.pop()
                if b not in seen:
                    seen.add(b)
                    stack.extend(f.block(b).succs)
            reachable_cache[fn] = seen
        return seen

    edges = coverage_frontier(icfg, snapshot, cfg)
    candidates: dict[str, Compartment] = {}
    for edge in edges:
        if edge.to_block not in reachable(edge.function):
            continue
        cid = f"{edge.function}:{edge.to_block}"
        current = candidates.get(cid)
        if current is not None and current.conditional_count >= edge.from_count:
            continue
        f = icfg.function(edge.function)
        candidates[cid] = Compartment(
            function=edge.function,
            entry_block=edge.to_block,
            kind="frontier",
            weight=WeightBreakdown(0, 0),
            conditional=edge,
            conditional_count=edge.from_count,
            conditional_loc=f.block(edge.from_block).loc,
            entry_loc=f.block(edge.to_block).loc,
            labels=LabelSet(),
        )
    theta = cfg.max_exec_count
    roots = set(cfg.roots)
    for f in icfg.functions:
        if f.name in roots:
            continue
        if cg.direct_caller_count(f.name) > 0:
            continue
        if snapshot.count(f.name, f.entry) > theta:
            continue
        cid = f"{f.name}:{f.entry}"
        if cid in candidates:
            continue  # already a frontier candidate; keep the conditional info
        candidates[cid] = Compartment(
            function=f.name,
            entry_block=f.entry,
            kind="indirect_target",
            weight=WeightBreakdown(0, 0),
            conditional=None,
            conditional_count=0,
            conditional_loc="",
            entry_loc=f.block(f.entry).loc,
            labels=LabelSet(),
        )
    return list(candidates.values())


def rank_compartments(
    candidates: list[Compartment],
    forest: DominatorForest,
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    cfg: AnalysisConfig,
) -> CompartmentReport:
    """Weigh every candidate and keep the top_k heaviest.

    Order: total weight descending, then function name, then entry block id.
    """
    weighted = [
        replace(
            c,
            weight=block_weight(
                forest.get(c.function), c.entry_block, cg, snapshot, cfg.max_exec_count
            ),
        )
        for c in candidates
    ]
    weighted.sort(key=lambda c: (-c.weight.total, c.function, c.entry_block))
    return CompartmentReport(
        config=cfg,
        snapshot_tag=snapshot.label,
        entries=tuple(weighted[: cfg.top_k]),
    )


def _apply_unlock(
    snapshot: ProfileSnapshot,
    comp: Compartment,
    forest: DominatorForest,
    cg: CallGraph,
    cfg: AnalysisConfig,
) -> ProfileSnapshot:
    keys = unlock_footprint(
        forest.get(comp.function), comp.entry_block, cg, snapshot, cfg.max_exec_count
    )
    if not keys:
        return snapshot
    counts = dict(snapshot.counts)
    for key in keys:
        counts[key] = cfg.max_exec_count + 1  # minimally covered, just over threshold
    return ProfileSnapshot(counts=counts, label=snapshot.label)


def whatif_unlock(
    report: CompartmentReport,
    compartment_id: str,
    icfg: Icfg,
    cg: CallGraph,
    snapshot: ProfileSnapshot,
    cfg: AnalysisConfig,
    mark_status: str = "resolved",
) -> CompartmentReport:
    """Re-rank as if the compartment had been unlocked.

    Previously resolved compartments are replayed in order against the base
    snapshot, so chained what-ifs and event-log replay agree. The unlocked
    compartment moves to the resolved list and leaves the ranking.
    """
    target = None
    for c in report.entries:
        if c.id == compartment_id:
            target = c
            break
    if target is None:
        raise AnalysisError(f"unknown compartment {compartment_id}")
    forest = DominatorForest(icfg)
    hypothetical = snapshot
    for prior in (*report.resolved, target):
        hypothetical = _apply_unlock(hypothetical, prior, forest, cg, cfg)
    done = {c.id for c in report.resolved} | {compartment_id}
    candidates = [
        c
        for c in enumerate_candidates(icfg, cg, hypothetical, cfg)
        if c.id not in done
    ]
    ranked = rank_compartments(candidates, forest, cg, hypothetical, cfg)
    return replace(
        ranked,
        snapshot_tag=report.snapshot_tag,
        resolved=(*report.resolved, replace(target, status=mark_status)),
    )


def still_locked(
    report: CompartmentReport,
    later: ProfileSnapshot,
    cfg: AnalysisConfig | None = None,
    icfg: Icfg | None = None,
) -> int:
    """How many report entries remain under the threshold in a later snapshot."""
    if icfg is not None:
        from .coverage import validate_profile

        validate_profile(icfg, later)
    theta = (cfg or report.config).max_exec_count
    return sum(1 for c in report.entries if later.count(c.function, c.entry_block) <= theta)


def topk_overlap(a: CompartmentReport, b: CompartmentReport, k: int) -> OverlapResult:
    """Shared compartment ids between two reports' top-k prefixes."""
    ids_a = {c.id for c in a.entries[:k]}
    ids_b = {c.id for c in b.entries[:k]}
    truncated = len(a.entries) < k or len(b.entries) < k
    return OverlapResult(overlap=len(ids_a & ids_b), k=k, truncated=truncated)
