"""End-to-end orchestration: load artifacts, analyze, produce the report."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .compartments import (
    CompartmentReport,
    enumerate_candidates,
    rank_compartments,
)
from .coverage import (
    AnalysisConfig,
    ProfileSnapshot,
    load_profile,
    merge_profiles,
    validate_profile,
)
from .errors import CompassError
from .evaluation import InputCoverage, attribute_corpus, load_coverage_manifest
from .icfg import (
    DominatorForest,
    DynamicCallEdge,
    Icfg,
    augment_call_graph,
    load_callgraph_log,
    load_icfg,
)
from .labels import LabelMap, annotate, load_labels


@dataclass(frozen=True)
class ArtifactSet:
    """Parsed campaign artifacts, ready for analysis."""

    icfg: Icfg
    snapshot: ProfileSnapshot
    call_edges: tuple[DynamicCallEdge, ...] = ()
    labels: LabelMap = field(default_factory=LabelMap)
    corpus: tuple[InputCoverage, ...] = ()


def _load_with_context(path: Path, loader, *args):
    try:
        return loader(path.read_bytes(), *args)
    except FileNotFoundError:
        raise CompassError(f"{path}: file not found") from None
    except CompassError as e:
        raise type(e)(f"{path}: {e}") from None


def load_artifacts(
    icfg_path: str | Path,
    profile_paths: Sequence[str | Path],
    callgraph_path: str | Path | None = None,
    labels_path: str | Path | None = None,
    corpus_path: str | Path | None = None,
) -> ArtifactSet:
    """Load artifact files; errors carry the offending file name."""
    icfg = _load_with_context(Path(icfg_path), load_icfg)
    snapshot = ProfileSnapshot()
    for p in profile_paths:
        p = Path(p)
        snapshot = merge_profiles(snapshot, _load_with_context(p, load_profile, p.stem))
    call_edges: tuple[DynamicCallEdge, ...] = ()
    if callgraph_path is not None:
        call_edges = tuple(_load_with_context(Path(callgraph_path), load_callgraph_log))
    labels = LabelMap()
    if labels_path is not None:
        labels = _load_with_context(Path(labels_path), load_labels)
    corpus: tuple[InputCoverage, ...] = ()
    if corpus_path is not None:
        corpus = tuple(_load_with_context(Path(corpus_path), load_coverage_manifest))
    return ArtifactSet(
        icfg=icfg,
        snapshot=snapshot,
        call_edges=call_edges,
        labels=labels,
        corpus=corpus,
    )


def analyze_artifacts(artifacts: ArtifactSet, cfg: AnalysisConfig) -> CompartmentReport:
    """load -> augment -> enumerate -> rank -> annotate -> attribute."""
    validate_profile(artifacts.icfg, artifacts.snapshot)
    cg = augment_call_graph(artifacts.icfg, artifacts.call_edges)
    forest = DominatorForest(artifacts.icfg)
    candidates = enumerate_candidates(artifacts.icfg, cg, artifacts.snapshot, cfg)
    report = rank_compartments(candidates, forest, cg, artifacts.snapshot, cfg)
    report = annotate(report, artifacts.labels)
    report = attribute_corpus(report, artifacts.corpus)
    return report


def run_pipeline(
    icfg_path: str | Path,
    profile_paths: Sequence[str | Path],
    callgraph_path: str | Path | None = None,
    labels_path: str | Path | None = None,
    corpus_path: str | Path | None = None,
    cfg: AnalysisConfig | None = None,
) -> CompartmentReport:
    artifacts = load_artifacts(
        icfg_path, profile_paths, callgraph_path, labels_path, corpus_path
    )
    return analyze_artifacts(artifacts, cfg or AnalysisConfig())
