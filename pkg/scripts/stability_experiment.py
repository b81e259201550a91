#!/usr/bin/env python3
"""Measure compartment stability across fuzzing budgets on a toy target.

Runs a short campaign and a long campaign with the same seeds, ranks
compartments from the short one, and reports how many of them stay locked in
the long campaign's profile plus the top-k overlap of the two rankings.
"""
import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from targets import MAGIC_SEEDS, magic_region_doc

from compass.compartments import still_locked, topk_overlap
from compass.coverage import AnalysisConfig
from compass.icfg import parse_icfg_doc
from compass.pipeline import ArtifactSet, analyze_artifacts
from compass.sim import FuzzRunConfig, load_sim_spec, sim_fuzz


def campaign(spec, iters, rng_seed):
    return sim_fuzz(spec, FuzzRunConfig(seeds=MAGIC_SEEDS, iterations=iters, rng_seed=rng_seed))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--regions", type=int, default=20)
    parser.add_argument("--short-iters", type=int, default=2000)
    parser.add_argument("--long-iters", type=int, default=30000)
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--rng-seed", type=int, default=1)
    args = parser.parse_args()

    weights = tuple(1000 - 40 * i for i in range(args.regions))
    doc = magic_region_doc(weights)
    spec = load_sim_spec(json.dumps(doc))
    icfg = parse_icfg_doc(doc)
    cfg = AnalysisConfig(top_k=args.k)

    short = campaign(spec, args.short_iters, args.rng_seed)
    long_run = campaign(spec, args.long_iters, args.rng_seed + 1)
    print(f"short campaign: {len(short.executed)} inputs; "
          f"long campaign: {len(long_run.executed)} inputs")

    report_short = analyze_artifacts(
        ArtifactSet(icfg=icfg, snapshot=short.profile, call_edges=short.call_edges), cfg
    )
    report_long = analyze_artifacts(
        ArtifactSet(icfg=icfg, snapshot=long_run.profile, call_edges=long_run.call_edges), cfg
    )

    locked = still_locked(report_short, long_run.profile, cfg, icfg)
    overlap = topk_overlap(report_short, report_long, args.k)
    print(f"compartments found early: {len(report_short.entries)}")
    print(f"still locked after the long campaign: {locked}/{len(report_short.entries)}")
    suffix = " (truncated)" if overlap.truncated else ""
    print(f"top-{overlap.k} overlap between rankings: {overlap.overlap}{suffix}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
