#!/usr/bin/env python3
"""Record a fixture session for the web UI tests.

Drives the real HTTP service over a simulated campaign and captures every
payload the UI consumes: the initial board, a solution-candidate submission,
and the full resolve sequence down to an empty board. The recording lands in
frontend/fixtures/session.json.
"""
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from targets import MAGIC_SEEDS, magic_region_doc, magic_solution_inputs

from compass.coverage import dump_profile
from compass.evaluation import dump_coverage_manifest
from compass.icfg import dump_callgraph_log
from compass.labels import dump_labels
from compass.service import SessionStore, create_app
from compass.sim import FuzzRunConfig, execute, load_sim_spec, sim_fuzz

WEIGHTS = (500, 400, 300, 200, 100)


def main() -> int:
    doc = magic_region_doc(WEIGHTS)
    spec = load_sim_spec(json.dumps(doc))
    result = sim_fuzz(spec, FuzzRunConfig(seeds=MAGIC_SEEDS, iterations=1500, rng_seed=42))

    solutions = []
    for i, data in enumerate(magic_solution_inputs(WEIGHTS)):
        trace = execute(spec, data)
        solutions.append(
            {
                "input": f"solution_{i + 1}",
                "covered": [{"fn": fn, "block": b} for fn, b in sorted(trace.covered)],
            }
        )

    with tempfile.TemporaryDirectory() as state:
        client = TestClient(create_app(SessionStore(Path(state))))
        created = client.post(
            "/sessions",
            json={
                "documents": {
                    "icfg": json.dumps(doc),
                    "profiles": [dump_profile(result.profile)],
                    "callgraph": dump_callgraph_log(result.call_edges),
                    "labels": dump_labels(result.labels),
                    "corpus": dump_coverage_manifest(result.per_input),
                },
                "config": {"max_exec_count": 50, "top_k": 20, "roots": []},
            },
        )
        created.raise_for_status()
        sid = created.json()["id"]

        recording = {
            "session": sid,
            "initial_report": client.get(f"/sessions/{sid}/report").json(),
            "candidate_request": solutions[0],
        }
        candidate = client.post(f"/sessions/{sid}/candidates", json=solutions[0])
        candidate.raise_for_status()
        recording["candidate_response"] = candidate.json()

        resolves = []
        while True:
            report = client.get(f"/sessions/{sid}/report").json()
            if not report["entries"]:
                break
            top = report["entries"][0]
            cid = f"{top['function']}:{top['entry_block']}"
            response = client.post(f"/sessions/{sid}/compartments/{cid}/resolve")
            response.raise_for_status()
            resolves.append({"compartment": cid, "report": response.json()})
        recording["resolves"] = resolves

        conflict = client.post(
            f"/sessions/{sid}/compartments/{resolves[0]['compartment']}/resolve"
        )
        recording["conflict"] = {
            "compartment": resolves[0]["compartment"],
            "status": conflict.status_code,
            "detail": conflict.json()["detail"],
        }
        recording["final_report"] = client.get(f"/sessions/{sid}/report").json()

    out = ROOT / "frontend" / "fixtures" / "session.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(recording, indent=2) + "\n")
    print(f"wrote {out} ({out.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
