"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input-format error, 3 internal
invariant violation. COMPASS_LOG=debug|info|warning controls verbosity.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .compartments import still_locked, topk_overlap, whatif_unlock
from .coverage import AnalysisConfig, dump_profile, load_profile
from .errors import AnalysisError, CompassError, FormatError, InternalError
from .evaluation import dump_coverage_manifest, evaluate_candidate, load_coverage_manifest
from .icfg import augment_call_graph, dump_callgraph_log
from .labels import dump_labels
from .pipeline import load_artifacts
from .report import RenderOptions, parse_report, render
from .sim import FuzzRunConfig, load_sim_spec, sim_fuzz

log = logging.getLogger("compass")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # input-format problems, so remap usage to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _analysis_config(args) -> AnalysisConfig:
    roots = tuple(r for r in (args.roots or "").split(",") if r)
    return AnalysisConfig(max_exec_count=args.max_exec_count, top_k=args.top, roots=roots)


def _add_artifact_flags(p: argparse.ArgumentParser, require_profile: bool = True) -> None:
    p.add_argument("--icfg", required=True, help="icfg document")
    p.add_argument(
        "--profile",
        action="append",
        required=require_profile,
        default=None,
        help="profile snapshot; repeat to merge several",
    )
    p.add_argument("--callgraph", required=True, help="dynamic call graph log")
    p.add_argument("--labels", help="taint label log")
    p.add_argument("--corpus", help="per-input coverage manifest")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-exec-count", type=int, default=50, metavar="N")
    p.add_argument("--top", type=int, default=20, metavar="N")
    p.add_argument("--roots", default="", help="comma-separated harness entry points")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compass", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="rank compartments from campaign artifacts")
    _add_artifact_flags(p)
    _add_config_flags(p)

    p = sub.add_parser("whatif", help="re-rank as if a compartment were unlocked")
    p.add_argument("--report", required=True)
    p.add_argument("--unlock", required=True, metavar="ID", help="compartment id fn:block")
    _add_artifact_flags(p)
    p.add_argument("--format", choices=("table", "json", "csv"), default="json")

    p = sub.add_parser("stability", help="compare a report against later results")
    p.add_argument("--report", required=True)
    p.add_argument("--later-profile", help="later snapshot: count still-locked entries")
    p.add_argument("--other-report", help="second report: top-k id overlap")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--icfg", help="validate the later profile against this icfg")

    p = sub.add_parser("evaluate", help="evaluate candidate inputs against a report")
    p.add_argument("--report", required=True)
    p.add_argument("--candidate-coverage", required=True, help="coverage manifest")

    p = sub.add_parser("simulate", help="fuzz a toy target, emitting campaign artifacts")
    p.add_argument("--spec", required=True, help="sim target document")
    p.add_argument("--seeds", required=True, help="directory of seed files")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--harness-flags", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("serve", help="run the triage HTTP service")
    p.add_argument("--state", required=True, help="session state directory")
    p.add_argument("--listen", default="127.0.0.1:8765", metavar="ADDR")

    return parser


def _cmd_analyze(args) -> int:
    artifacts = load_artifacts(args.icfg, args.profile, args.callgraph, args.labels, args.corpus)
    from .pipeline import analyze_artifacts

    report = analyze_artifacts(artifacts, _analysis_config(args))
    sys.stdout.write(render(report, RenderOptions(format=args.format)))
    return 0


def _cmd_whatif(args) -> int:
    report = parse_report(Path(args.report).read_text())
    artifacts = load_artifacts(args.icfg, args.profile, args.callgraph, args.labels, args.corpus)
    cg = augment_call_graph(artifacts.icfg, artifacts.call_edges)
    updated = whatif_unlock(
        report, args.unlock, artifacts.icfg, cg, artifacts.snapshot, report.config
    )
    from .evaluation import attribute_corpus
    from .labels import annotate

    updated = attribute_corpus(annotate(updated, artifacts.labels), artifacts.corpus)
    sys.stdout.write(render(updated, RenderOptions(format=args.format)))
    return 0


def _cmd_stability(args) -> int:
    report = parse_report(Path(args.report).read_text())
    if args.later_profile:
        later = load_profile(Path(args.later_profile).read_bytes(), Path(args.later_profile).stem)
        icfg = None
        if args.icfg:
            from .icfg import load_icfg

            icfg = load_icfg(Path(args.icfg).read_bytes())
        count = still_locked(report, later, report.config, icfg)
        print(f"still_locked {count} of {len(report.entries)}")
        return 0
    if args.other_report:
        other = parse_report(Path(args.other_report).read_text())
        result = topk_overlap(report, other, args.k)
        suffix = " (truncated)" if result.truncated else ""
        print(f"topk_overlap {result.overlap} of {result.k}{suffix}")
        return 0
    raise FormatError("stability needs --later-profile or --other-report")


def _cmd_evaluate(args) -> int:
    report = parse_report(Path(args.report).read_text())
    candidates = load_coverage_manifest(Path(args.candidate_coverage).read_bytes())
    for candidate in candidates:
        evaluation = evaluate_candidate(report, candidate)
        for o in evaluation.outcomes:
            print(
                f"{evaluation.input_name} {o.compartment_id} "
                f"reaches_conditional={str(o.reaches_conditional).lower()} "
                f"unlocks_entry={str(o.unlocks_entry).lower()}"
            )
    return 0


def _cmd_simulate(args) -> int:
    spec = load_sim_spec(Path(args.spec).read_bytes())
    seed_dir = Path(args.seeds)
    seed_files = sorted(p for p in seed_dir.iterdir() if p.is_file())
    if not seed_files:
        raise FormatError(f"no seed files in {seed_dir}")
    cfg = FuzzRunConfig(
        seeds=tuple(p.read_bytes() for p in seed_files),
        harness_flags=args.harness_flags,
        iterations=args.iters,
        rng_seed=args.rng_seed,
    )
    result = sim_fuzz(spec, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "profile.jsonl").write_text(dump_profile(result.profile))
    (out / "callgraph.jsonl").write_text(dump_callgraph_log(result.call_edges))
    (out / "labels.jsonl").write_text(dump_labels(result.labels))
    (out / "corpus.jsonl").write_text(dump_coverage_manifest(result.per_input))
    queue_dir = out / "queue"
    queue_dir.mkdir(exist_ok=True)
    for name, data in result.queue:
        (queue_dir / name).write_bytes(data)
    log.info("simulated %d inputs, queue size %d", len(result.executed), len(result.queue))
    print(f"wrote artifacts for {len(result.queue)} queue inputs to {out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(SessionStore(Path(args.state)))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "whatif": _cmd_whatif,
    "stability": _cmd_stability,
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("COMPASS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InternalError as e:
        print(f"compass: internal error: {e}", file=sys.stderr)
        return 3
    except (FormatError, AnalysisError) as e:
        print(f"compass: {e}", file=sys.stderr)
        return 2
    except CompassError as e:
        print(f"compass: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"compass: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
