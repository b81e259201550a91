import json

import pytest
from fastapi.testclient import TestClient

from compass.coverage import dump_profile
from compass.icfg import dump_callgraph_log
from compass.labels import dump_labels
from compass.evaluation import dump_coverage_manifest
from compass.report import parse_report
from compass.service import SessionStore, create_app
from compass.sim import FuzzRunConfig, load_sim_spec, sim_fuzz

from targets import MAGIC_SEEDS, magic_region_doc, magic_solution_inputs

WEIGHTS = (500, 400, 300, 200, 100)


@pytest.fixture(scope="module")
def campaign():
    doc = magic_region_doc(WEIGHTS)
    spec = load_sim_spec(json.dumps(doc))
    result = sim_fuzz(spec, FuzzRunConfig(seeds=MAGIC_SEEDS, iterations=1500, rng_seed=42))
    solutions = []
    from compass.sim import execute

    for i, data in enumerate(magic_solution_inputs(WEIGHTS)):
        trace = execute(spec, data)
        solutions.append(
            {
                "input": f"solution_{i + 1}",
                "covered": [{"fn": fn, "block": b} for fn, b in sorted(trace.covered)],
            }
        )
    return {
        "icfg": json.dumps(doc),
        "profiles": [dump_profile(result.profile)],
        "callgraph": dump_callgraph_log(result.call_edges),
        "labels": dump_labels(result.labels),
        "corpus": dump_coverage_manifest(result.per_input),
        "solutions": solutions,
    }


def _documents(campaign):
    return {
        "documents": {
            "icfg": campaign["icfg"],
            "profiles": campaign["profiles"],
            "callgraph": campaign["callgraph"],
            "labels": campaign["labels"],
            "corpus": campaign["corpus"],
        },
        "config": {"max_exec_count": 50, "top_k": 20, "roots": []},
    }


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(SessionStore(tmp_path / "state")))


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_create_session_returns_report(client, campaign):
    response = client.post("/sessions", json=_documents(campaign))
    assert response.status_code == 201
    body = response.json()
    assert body["id"]
    entries = body["report"]["entries"]
    assert len(entries) == 5
    assert [e["weight"] for e in entries] == list(WEIGHTS)
    assert [e["rank"] for e in entries] == [1, 2, 3, 4, 5]
    assert all(e["label"] == "I" for e in entries)  # byte guards read the input


def test_create_session_rejects_bad_icfg(client, campaign):
    payload = _documents(campaign)
    bad = json.loads(campaign["icfg"])
    bad["functions"][0]["blocks"][0]["succs"] = ["nope"]
    payload["documents"]["icfg"] = json.dumps(bad)
    response = client.post("/sessions", json=payload)
    assert response.status_code == 422
    assert "dangling successor" in response.json()["detail"]


def test_identical_artifacts_identical_reports(client, campaign):
    a = client.post("/sessions", json=_documents(campaign)).json()["id"]
    b = client.post("/sessions", json=_documents(campaign)).json()["id"]
    report_a = client.get(f"/sessions/{a}/report").text
    report_b = client.get(f"/sessions/{b}/report").text
    assert report_a == report_b


def test_report_csv_format(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    response = client.get(f"/sessions/{sid}/report", params={"format": "csv"})
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/csv")
    assert response.text.splitlines()[0].startswith("Rank,Function,Weight")


def test_get_compartment_and_404(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    top = client.get(f"/sessions/{sid}/report").json()["entries"][0]
    cid = f"{top['function']}:{top['entry_block']}"
    one = client.get(f"/sessions/{sid}/compartments/{cid}")
    assert one.status_code == 200
    assert one.json()["weight"] == top["weight"]
    missing = client.get(f"/sessions/{sid}/compartments/nope:bb0")
    assert missing.status_code == 404


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/report").status_code == 404
    assert client.post("/sessions/nope/candidates", json={}).status_code == 404


def test_candidate_unlocks_and_reranks(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    solution = campaign["solutions"][0]  # unlocks the rank-1 region
    response = client.post(f"/sessions/{sid}/candidates", json=solution)
    assert response.status_code == 200
    body = response.json()
    unlocked = [o for o in body["outcomes"] if o["unlocks_entry"]]
    assert [o["compartment"] for o in unlocked] == ["main:r1_0"]
    report = client.get(f"/sessions/{sid}/report").json()
    assert [e["weight"] for e in report["entries"]] == [400, 300, 200, 100]
    assert [r["status"] for r in report["resolved"]] == ["unlocked"]
    assert report["resolved"][0]["entry_block"] == "r1_0"


def test_candidate_covering_nothing_changes_nothing(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    before = client.get(f"/sessions/{sid}/report").text
    response = client.post(
        f"/sessions/{sid}/candidates",
        json={"input": "noop", "covered": [{"fn": "main", "block": "e0"}]},
    )
    assert response.status_code == 200
    assert all(not o["unlocks_entry"] for o in response.json()["outcomes"])
    assert client.get(f"/sessions/{sid}/report").text == before


def test_resolve_flow_with_conflict_and_404(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    report = client.get(f"/sessions/{sid}/report").json()
    first = report["entries"][0]
    cid = f"{first['function']}:{first['entry_block']}"
    response = client.post(f"/sessions/{sid}/compartments/{cid}/resolve")
    assert response.status_code == 200
    assert response.json()["entries"][0]["weight"] == 400
    again = client.post(f"/sessions/{sid}/compartments/{cid}/resolve")
    assert again.status_code == 409
    missing = client.post(f"/sessions/{sid}/compartments/nope:bb0/resolve")
    assert missing.status_code == 404


def test_resolve_all_empties_locked_list(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    for _ in range(5):
        report = client.get(f"/sessions/{sid}/report").json()
        first = report["entries"][0]
        cid = f"{first['function']}:{first['entry_block']}"
        assert client.post(f"/sessions/{sid}/compartments/{cid}/resolve").status_code == 200
    final = client.get(f"/sessions/{sid}/report").json()
    assert final["entries"] == []
    assert len(final["resolved"]) == 5
    assert [r["status"] for r in final["resolved"]] == ["resolved"] * 5


def test_stability_endpoints(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    same = client.post(
        f"/sessions/{sid}/stability", json={"later_profile": campaign["profiles"][0]}
    )
    assert same.status_code == 200
    assert same.json() == {"still_locked": 5, "entries": 5}
    report_doc = client.get(f"/sessions/{sid}/report").json()
    overlap = client.post(
        f"/sessions/{sid}/stability", json={"other_report": report_doc, "k": 5}
    )
    assert overlap.status_code == 200
    assert overlap.json()["topk_overlap"] == 5


def test_state_survives_restart(tmp_path, campaign):
    state = tmp_path / "state"
    client1 = TestClient(create_app(SessionStore(state)))
    sid = client1.post("/sessions", json=_documents(campaign)).json()["id"]
    report = client1.get(f"/sessions/{sid}/report").json()
    first = report["entries"][0]
    client1.post(
        f"/sessions/{sid}/compartments/{first['function']}:{first['entry_block']}/resolve"
    )
    expected = client1.get(f"/sessions/{sid}/report").text

    client2 = TestClient(create_app(SessionStore(state)))
    assert client2.get(f"/sessions/{sid}/report").text == expected


def test_create_session_from_paths(tmp_path, campaign):
    art = tmp_path / "artifacts"
    art.mkdir()
    (art / "icfg.json").write_text(campaign["icfg"])
    (art / "profile.jsonl").write_text(campaign["profiles"][0])
    (art / "callgraph.jsonl").write_text(campaign["callgraph"])
    client = TestClient(create_app(SessionStore(tmp_path / "state")))
    response = client.post(
        "/sessions",
        json={
            "paths": {
                "icfg": str(art / "icfg.json"),
                "profiles": [str(art / "profile.jsonl")],
                "callgraph": str(art / "callgraph.jsonl"),
            },
            "config": {"top_k": 3},
        },
    )
    assert response.status_code == 201
    assert len(response.json()["report"]["entries"]) == 3


def test_report_payload_parses_with_library(client, campaign):
    sid = client.post("/sessions", json=_documents(campaign)).json()["id"]
    report = parse_report(client.get(f"/sessions/{sid}/report").text)
    assert len(report.entries) == 5
