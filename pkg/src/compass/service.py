"""HTTP triage service: sessions over campaign artifacts, report serving,
candidate evaluation, resolve/what-if actions, stability checks.

Sessions are event-sourced: the artifacts and an ordered action log are
persisted under the state directory, and the served report is always the
result of replaying that log, so a restarted service reproduces its state
exactly and never needs a database.
"""
from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from .compartments import CompartmentReport, still_locked, topk_overlap, whatif_unlock
from .coverage import AnalysisConfig, load_profile
from .errors import CompassError
from .evaluation import (
    CandidateEvaluation,
    attribute_corpus,
    evaluate_candidate,
    parse_manifest_record,
)
from .icfg import CallGraph, augment_call_graph
from .labels import annotate
from .pipeline import ArtifactSet, analyze_artifacts, load_artifacts
from .report import RenderOptions, entry_to_doc, export_report, parse_report, render

_ARTIFACT_FILES = {
    "icfg": "icfg.json",
    "callgraph": "callgraph.jsonl",
    "labels": "labels.jsonl",
    "corpus": "corpus.jsonl",
}


@dataclass
class Session:
    id: str
    directory: Path
    artifacts: ArtifactSet
    cg: CallGraph
    cfg: AnalysisConfig
    report: CompartmentReport | None = None  # populated by replay()
    actions: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def _finish(self, report: CompartmentReport) -> CompartmentReport:
        # Re-ranking rebuilds entries from scratch; restore labels/attribution.
        report = annotate(report, self.artifacts.labels)
        return attribute_corpus(report, self.artifacts.corpus)

    def _apply(self, action: dict, report: CompartmentReport) -> CompartmentReport:
        if action["type"] == "resolve":
            report = whatif_unlock(
                report,
                action["compartment"],
                self.artifacts.icfg,
                self.cg,
                self.artifacts.snapshot,
                self.cfg,
                mark_status="resolved",
            )
            return self._finish(report)
        if action["type"] == "candidate":
            candidate = parse_manifest_record(action["entry"])
            evaluation = evaluate_candidate(report, candidate)
            for cid in evaluation.unlocked_ids():
                current = report.find(cid)
                if any(c.id == cid for c in report.entries):
                    report = self._finish(
                        whatif_unlock(
                            report,
                            cid,
                            self.artifacts.icfg,
                            self.cg,
                            self.artifacts.snapshot,
                            self.cfg,
                            mark_status="unlocked",
                        )
                    )
                elif current is not None and current.status == "locked":
                    # Dropped from the ranking by an earlier unlock in this
                    # same candidate; still record the state change.
                    report = replace(
                        report,
                        resolved=(*report.resolved, replace(current, status="unlocked")),
                    )
            return report
        raise CompassError(f"unknown action type {action['type']!r}")

    def replay(self) -> None:
        report = analyze_artifacts(self.artifacts, self.cfg)
        for action in self.actions:
            report = self._apply(action, report)
        self.report = report

    def record(self, action: dict) -> None:
        """Apply and persist one action; callers hold the session lock."""
        self.report = self._apply(action, self.report)
        self.actions.append(action)
        with (self.directory / "actions.jsonl").open("a") as fh:
            fh.write(json.dumps(action) + "\n")


class SessionStore:
    def __init__(self, state_dir: Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        for meta in sorted(self.state_dir.glob("*/config.json")):
            self._load_session(meta.parent)

    def _load_session(self, directory: Path) -> Session:
        cfg_doc = json.loads((directory / "config.json").read_text())
        cfg = AnalysisConfig(
            max_exec_count=cfg_doc.get("max_exec_count", 50),
            top_k=cfg_doc.get("top_k", 20),
            roots=tuple(cfg_doc.get("roots", ())),
        )
        art_dir = directory / "artifacts"
        profiles = sorted(art_dir.glob("profile*.jsonl"))
        callgraph = art_dir / _ARTIFACT_FILES["callgraph"]
        labels = art_dir / _ARTIFACT_FILES["labels"]
        corpus = art_dir / _ARTIFACT_FILES["corpus"]
        artifacts = load_artifacts(
            art_dir / _ARTIFACT_FILES["icfg"],
            profiles,
            callgraph if callgraph.exists() else None,
            labels if labels.exists() else None,
            corpus if corpus.exists() else None,
        )
        session = Session(
            id=directory.name,
            directory=directory,
            artifacts=artifacts,
            cg=augment_call_graph(artifacts.icfg, artifacts.call_edges),
            cfg=cfg,
        )
        actions_file = directory / "actions.jsonl"
        if actions_file.exists():
            session.actions = [
                json.loads(line)
                for line in actions_file.read_text().splitlines()
                if line.strip()
            ]
        session.replay()
        self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    def create(self, payload: dict) -> Session:
        documents = self._gather_documents(payload)
        sid = uuid.uuid4().hex[:12]
        directory = self.state_dir / sid
        art_dir = directory / "artifacts"
        art_dir.mkdir(parents=True)
        (art_dir / _ARTIFACT_FILES["icfg"]).write_text(documents["icfg"])
        for i, text in enumerate(documents["profiles"]):
            (art_dir / f"profile_{i:03d}.jsonl").write_text(text)
        for key in ("callgraph", "labels", "corpus"):
            if documents.get(key) is not None:
                (art_dir / _ARTIFACT_FILES[key]).write_text(documents[key])
        cfg = payload.get("config", {})
        if not isinstance(cfg, dict):
            raise HTTPException(status_code=422, detail="config must be an object")
        (directory / "config.json").write_text(json.dumps(cfg))
        (directory / "actions.jsonl").write_text("")
        with self._lock:
            return self._load_session(directory)

    @staticmethod
    def _gather_documents(payload: dict) -> dict:
        documents = payload.get("documents")
        paths = payload.get("paths")
        if documents is None and paths is None:
            raise HTTPException(status_code=422, detail="need 'documents' or 'paths'")
        out: dict = {}
        source = documents if documents is not None else paths

        def read(value: str) -> str:
            if documents is not None:
                return value
            return Path(value).read_text()

        if not isinstance(source, dict) or "icfg" not in source:
            raise HTTPException(status_code=422, detail="missing icfg artifact")
        try:
            out["icfg"] = read(source["icfg"])
            raw_profiles = source.get("profiles", [])
            if isinstance(raw_profiles, str):
                raw_profiles = [raw_profiles]
            out["profiles"] = [read(p) for p in raw_profiles]
            for key in ("callgraph", "labels", "corpus"):
                out[key] = read(source[key]) if source.get(key) else None
        except OSError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        return out


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="compass triage service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store.sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        try:
            session = store.create(payload)
        except CompassError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        return {"id": session.id, "report": export_report(session.report)}

    @app.get("/sessions/{sid}/report")
    def get_report(sid: str, format: str = "json"):
        session = store.get(sid)
        if format == "csv":
            return Response(
                content=render(session.report, RenderOptions(format="csv")),
                media_type="text/csv",
            )
        if format != "json":
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")
        return export_report(session.report)

    @app.get("/sessions/{sid}/compartments/{cid}")
    def get_compartment(sid: str, cid: str):
        session = store.get(sid)
        for i, c in enumerate(session.report.entries):
            if c.id == cid:
                return entry_to_doc(c, i + 1)
        for c in session.report.resolved:
            if c.id == cid:
                return entry_to_doc(c, 0)
        raise HTTPException(status_code=404, detail=f"unknown compartment {cid}")

    @app.post("/sessions/{sid}/candidates")
    def post_candidate(sid: str, entry: dict = Body(...)):
        session = store.get(sid)
        with session.lock:
            try:
                candidate = parse_manifest_record(entry)
                evaluation: CandidateEvaluation = evaluate_candidate(
                    session.report, candidate
                )
                session.record({"type": "candidate", "entry": entry})
            except CompassError as e:
                raise HTTPException(status_code=422, detail=str(e)) from None
        return {
            "input": evaluation.input_name,
            "outcomes": [
                {
                    "compartment": o.compartment_id,
                    "reaches_conditional": o.reaches_conditional,
                    "unlocks_entry": o.unlocks_entry,
                }
                for o in evaluation.outcomes
            ],
            "report": export_report(session.report),
        }

    @app.post("/sessions/{sid}/compartments/{cid}/resolve")
    def resolve_compartment(sid: str, cid: str):
        session = store.get(sid)
        with session.lock:
            if any(c.id == cid for c in session.report.resolved):
                raise HTTPException(status_code=409, detail=f"{cid} already resolved")
            if not any(c.id == cid for c in session.report.entries):
                raise HTTPException(status_code=404, detail=f"unknown compartment {cid}")
            try:
                session.record({"type": "resolve", "compartment": cid})
            except CompassError as e:
                raise HTTPException(status_code=422, detail=str(e)) from None
        return export_report(session.report)

    @app.post("/sessions/{sid}/stability")
    def post_stability(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        try:
            if "later_profile" in payload:
                later = load_profile(payload["later_profile"], "later")
                count = still_locked(
                    session.report, later, session.cfg, session.artifacts.icfg
                )
                return {"still_locked": count, "entries": len(session.report.entries)}
            if "other_report" in payload:
                other = parse_report(payload["other_report"])
                result = topk_overlap(session.report, other, int(payload.get("k", 20)))
                return {
                    "topk_overlap": result.overlap,
                    "k": result.k,
                    "truncated": result.truncated,
                }
        except CompassError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        raise HTTPException(
            status_code=422, detail="need 'later_profile' or 'other_report'"
        )

    return app
