import pytest

from compass.compartments import enumerate_candidates, rank_compartments
from compass.coverage import AnalysisConfig
from compass.errors import FormatError
from compass.evaluation import (
    InputCoverage,
    attribute_corpus,
    dump_coverage_manifest,
    evaluate_candidate,
    load_coverage_manifest,
)
from compass.icfg import DominatorForest, augment_call_graph
from compass.sim import execute, load_sim_spec

from targets import (
    FONT_CORPUS_LOG,
    font_library_icfg,
    font_library_profile,
    magic_region_doc,
    magic_solution_inputs,
)


def _font_report():
    icfg = font_library_icfg()
    cfg = AnalysisConfig()
    cg = augment_call_graph(icfg, [])
    snap = font_library_profile()
    cands = enumerate_candidates(icfg, cg, snap, cfg)
    return rank_compartments(cands, DominatorForest(icfg), cg, snap, cfg)


def test_manifest_roundtrip():
    corpus = load_coverage_manifest(FONT_CORPUS_LOG)
    assert [c.input_name for c in corpus] == [
        "Zurich.pfr",
        "courB10.pcf.Z",
        "96h_004325",
        "Lack.woff",
        "FiraCode-VF.woff",
    ]
    assert load_coverage_manifest(dump_coverage_manifest(corpus)) == corpus


def test_manifest_malformed():
    with pytest.raises(FormatError, match="line 1"):
        load_coverage_manifest('{"input": "x"}\n')


def test_attribute_corpus_table_semantics():
    report = attribute_corpus(_font_report(), load_coverage_manifest(FONT_CORPUS_LOG))
    rows = {c.function: c for c in report.entries}
    # Input covering conditional and entry shows up in both columns.
    assert rows["pfr_face_init"].input_name == "Zurich.pfr"
    assert rows["pfr_face_init"].solution_name == "Zurich.pfr"
    assert rows["pcf_load_font"].input_name == "courB10.pcf.Z"
    assert rows["pcf_load_font"].solution_name == "courB10.pcf.Z"
    # Input reaching only the conditional leaves Solution blank.
    assert rows["cid_face_open"].input_name == "96h_004325"
    assert rows["cid_face_open"].solution_name == ""
    # First conditional-reacher wins Input even when a later input solves.
    assert rows["woff_open_font"].input_name == "Lack.woff"
    assert rows["woff_open_font"].solution_name == "FiraCode-VF.woff"


def test_attribute_empty_corpus_leaves_columns_blank():
    report = attribute_corpus(_font_report(), [])
    for c in report.entries:
        assert c.input_name == "" and c.solution_name == ""


def test_attribute_determinism_by_corpus_order():
    corpus = load_coverage_manifest(FONT_CORPUS_LOG)
    a = attribute_corpus(_font_report(), corpus)
    b = attribute_corpus(_font_report(), corpus)
    assert a == b
    flipped = attribute_corpus(_font_report(), list(reversed(corpus)))
    rows = {c.function: c for c in flipped.entries}
    assert rows["woff_open_font"].input_name == "FiraCode-VF.woff"


def test_solution_soundness():
    report = attribute_corpus(_font_report(), load_coverage_manifest(FONT_CORPUS_LOG))
    by_name = {c.input_name: c for c in load_coverage_manifest(FONT_CORPUS_LOG)}
    for c in report.entries:
        if c.solution_name:
            assert by_name[c.solution_name].covers(c.function, c.entry_block)


def test_evaluate_candidate_single_unlock():
    report = _font_report()
    candidate = InputCoverage(
        input_name="new.pfr",
        covered=frozenset({("pfr_face_init", "p1"), ("pfr_face_init", "p2")}),
    )
    evaluation = evaluate_candidate(report, candidate)
    outcomes = {o.compartment_id: o for o in evaluation.outcomes}
    assert outcomes["pfr_face_init:p2"].unlocks_entry
    assert outcomes["pfr_face_init:p2"].reaches_conditional
    assert sum(o.unlocks_entry for o in evaluation.outcomes) == 1
    assert sum(o.reaches_conditional for o in evaluation.outcomes) == 1


def test_evaluate_candidate_reaches_without_unlock():
    report = _font_report()
    candidate = InputCoverage(
        input_name="probe", covered=frozenset({("cid_face_open", "d1")})
    )
    evaluation = evaluate_candidate(report, candidate)
    outcomes = {o.compartment_id: o for o in evaluation.outcomes}
    assert outcomes["cid_face_open:d2"].reaches_conditional
    assert not outcomes["cid_face_open:d2"].unlocks_entry


def test_evaluate_monotone_under_coverage_extension():
    report = _font_report()
    small = InputCoverage("x", frozenset({("cid_face_open", "d1")}))
    big = InputCoverage(
        "x", small.covered | {("cid_face_open", "d2"), ("woff_open_font", "w1")}
    )
    eval_small = {o.compartment_id: o for o in evaluate_candidate(report, small).outcomes}
    eval_big = {o.compartment_id: o for o in evaluate_candidate(report, big).outcomes}
    for cid, o in eval_small.items():
        if o.reaches_conditional:
            assert eval_big[cid].reaches_conditional
        if o.unlocks_entry:
            assert eval_big[cid].unlocks_entry


def test_magic_seed_unlocks_gated_compartment_in_sim():
    import json

    spec = load_sim_spec(json.dumps(magic_region_doc()))
    good = magic_solution_inputs()[0]  # carries the first region's magic
    near_miss = bytearray(good)
    near_miss[3] ^= 0xFF  # breaks the fourth magic byte
    trace_good = execute(spec, bytes(good))
    trace_miss = execute(spec, bytes(near_miss))
    assert ("main", "r1_0") in trace_good.hits
    assert ("main", "g1") in trace_miss.hits
    assert ("main", "r1_0") not in trace_miss.hits
