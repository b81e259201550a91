#!/usr/bin/env python3
"""Desk-scale walkthrough of the triage loop on a magic-gated toy target.

Builds a program with five regions locked behind 4-byte magic values, fuzzes
it, ranks the locked compartments, evaluates solution seeds, and replays the
greedy resolve loop until the board is empty. Everything is deterministic
for a given --rng-seed.
"""
import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from targets import MAGIC_SEEDS, magic_region_doc, magic_solution_inputs, region_magics

from compass.compartments import whatif_unlock
from compass.coverage import AnalysisConfig
from compass.evaluation import InputCoverage, attribute_corpus, evaluate_candidate
from compass.icfg import augment_call_graph, parse_icfg_doc
from compass.labels import annotate
from compass.pipeline import ArtifactSet, analyze_artifacts
from compass.report import RenderOptions, render
from compass.sim import FuzzRunConfig, execute, load_sim_spec, sim_fuzz

WEIGHTS = (500, 400, 300, 200, 100)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=50000)
    parser.add_argument("--rng-seed", type=int, default=42)
    parser.add_argument("--max-exec-count", type=int, default=50)
    args = parser.parse_args()

    doc = magic_region_doc(WEIGHTS)
    spec = load_sim_spec(json.dumps(doc))
    icfg = parse_icfg_doc(doc)
    cfg = AnalysisConfig(max_exec_count=args.max_exec_count)

    print(f"== fuzzing {args.iters} iterations (rng_seed={args.rng_seed}) ==")
    result = sim_fuzz(
        spec,
        FuzzRunConfig(seeds=MAGIC_SEEDS, iterations=args.iters, rng_seed=args.rng_seed),
    )
    print(f"executed {len(result.executed)} inputs, queue kept {len(result.queue)}")

    artifacts = ArtifactSet(
        icfg=icfg,
        snapshot=result.profile,
        call_edges=result.call_edges,
        labels=result.labels,
    )
    report = analyze_artifacts(artifacts, cfg)
    print("\n== locked compartments after fuzzing ==")
    print(render(report), end="")

    print("== evaluating candidate seeds ==")
    solutions = []
    for magic, data in zip(region_magics(len(WEIGHTS)), magic_solution_inputs(WEIGHTS)):
        trace = execute(spec, data)
        candidate = InputCoverage(input_name=f"seed-{magic.decode()}", covered=trace.covered)
        solutions.append(candidate)
        evaluation = evaluate_candidate(report, candidate)
        unlocked = [o.compartment_id for o in evaluation.outcomes if o.unlocks_entry]
        print(f"  {candidate.input_name}: unlocks {', '.join(unlocked) or 'nothing'}")

    report = attribute_corpus(report, solutions)
    print("\n== board with Solution column filled ==")
    print(
        render(
            report,
            RenderOptions(columns=("Rank", "Function", "Weight", "Compartment", "Solution")),
        ),
        end="",
    )

    print("== greedy resolve loop ==")
    cg = augment_call_graph(icfg, result.call_edges)
    step = 1
    while report.entries:
        top = report.entries[0]
        print(f"  step {step}: resolve {top.id} (weight {top.weight.total})")
        report = whatif_unlock(report, top.id, icfg, cg, result.profile, cfg)
        report = attribute_corpus(annotate(report, result.labels), solutions)
        step += 1
    print(f"board empty after {step - 1} interventions; "
          f"{len(report.resolved)} compartments resolved")
    return 0


if __name__ == "__main__":
    sys.exit(main())
