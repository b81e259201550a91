"""Compartment-based triage for coverage-guided fuzzing campaigns."""

from .compartments import (
    Compartment,
    CompartmentReport,
    OverlapResult,
    StabilityResult,
    WeightBreakdown,
    block_weight,
    calls_weight,
    enumerate_candidates,
    rank_compartments,
    still_locked,
    topk_overlap,
    whatif_unlock,
)
from .coverage import (
    AnalysisConfig,
    FrontierEdge,
    ProfileSnapshot,
    coverage_frontier,
    entry_count,
    load_profile,
    merge_profiles,
)
from .errors import AnalysisError, CompassError, FormatError, InternalError
from .evaluation import (
    CandidateEvaluation,
    InputCoverage,
    attribute_corpus,
    evaluate_candidate,
    load_coverage_manifest,
)
from .icfg import (
    CallGraph,
    DominatorForest,
    DominatorTree,
    DynamicCallEdge,
    Icfg,
    IndirectStats,
    augment_call_graph,
    build_dominator_tree,
    indirect_call_summary,
    load_callgraph_log,
    load_icfg,
)
from .labels import LabelMap, LabelSet, annotate, load_labels
from .pipeline import ArtifactSet, analyze_artifacts, load_artifacts, run_pipeline
from .report import RenderOptions, export_report, parse_report, render, report_to_json
from .sim import (
    ExecutionTrace,
    FuzzRunConfig,
    SimFuzzResult,
    SimTargetSpec,
    execute,
    load_sim_spec,
    sim_fuzz,
)

__version__ = "0.1.0"
