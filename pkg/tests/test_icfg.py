import json
import random

import pytest

from compass.errors import AnalysisError, FormatError
from compass.icfg import (
    DynamicCallEdge,
    augment_call_graph,
    build_dominator_tree,
    dump_callgraph_log,
    indirect_call_summary,
    load_callgraph_log,
    load_icfg,
    parse_icfg_doc,
)

from oracles import oracle_idoms, random_function_doc, random_program
from targets import dispatch_doc


def _icfg(doc):
    return parse_icfg_doc(doc)


def _fn_doc(name, blocks, entry=None):
    return {
        "name": name,
        "entry": entry or blocks[0]["id"],
        "size": sum(b["size"] for b in blocks),
        "blocks": blocks,
    }


def test_load_minimal_function():
    icfg = load_icfg(
        json.dumps(
            {
                "functions": [
                    {
                        "name": "f",
                        "size": 3,
                        "entry": "b0",
                        "blocks": [{"id": "b0", "size": 3, "succs": [], "loc": "f.c:1"}],
                    }
                ]
            }
        )
    )
    assert len(icfg.functions) == 1
    assert icfg.function("f").block("b0").size == 3


def test_size_mismatch_rejected():
    doc = {
        "functions": [
            {
                "name": "f",
                "size": 10,
                "entry": "b0",
                "blocks": [{"id": "b0", "size": 7, "succs": []}],
            }
        ]
    }
    with pytest.raises(FormatError, match="size mismatch f"):
        parse_icfg_doc(doc)


def test_dangling_successor_rejected():
    doc = {"functions": [_fn_doc("f", [{"id": "b0", "size": 3, "succs": ["b9"]}])]}
    with pytest.raises(FormatError, match="dangling successor f:b0->b9"):
        parse_icfg_doc(doc)


def test_dangling_call_target_rejected():
    doc = {
        "functions": [
            _fn_doc(
                "f",
                [{"id": "b0", "size": 1, "succs": [], "calls": [{"kind": "direct", "target": "g"}]}],
            )
        ]
    }
    with pytest.raises(FormatError, match="dangling call target f:b0->g"):
        parse_icfg_doc(doc)


def test_duplicate_identifiers_rejected():
    doc = {
        "functions": [
            _fn_doc("f", [{"id": "b0", "size": 1, "succs": []}]),
            _fn_doc("f", [{"id": "b0", "size": 1, "succs": []}]),
        ]
    }
    with pytest.raises(FormatError, match="duplicate function f"):
        parse_icfg_doc(doc)
    doc = {
        "functions": [
            _fn_doc(
                "f",
                [{"id": "b0", "size": 1, "succs": []}, {"id": "b0", "size": 1, "succs": []}],
            )
        ]
    }
    with pytest.raises(FormatError, match="duplicate block f:b0"):
        parse_icfg_doc(doc)


def test_empty_block_rejected():
    doc = {"functions": [_fn_doc("f", [{"id": "b0", "size": 0, "succs": []}])]}
    with pytest.raises(FormatError, match="empty block f:b0"):
        parse_icfg_doc(doc)


def test_entry_must_belong_to_function():
    doc = {
        "functions": [
            {
                "name": "f",
                "size": 1,
                "entry": "nope",
                "blocks": [{"id": "b0", "size": 1, "succs": []}],
            }
        ]
    }
    with pytest.raises(FormatError, match="entry nope"):
        parse_icfg_doc(doc)


def test_duplicate_indirect_site_rejected():
    blocks = [
        {"id": "b0", "size": 1, "succs": [], "calls": [{"kind": "indirect", "site": "s0"}]}
    ]
    doc = {
        "functions": [
            _fn_doc("f", blocks),
            _fn_doc("g", [dict(blocks[0])]),
        ]
    }
    with pytest.raises(FormatError, match="duplicate indirect site s0"):
        parse_icfg_doc(doc)


# -- dominator trees ---------------------------------------------------------


def test_dominators_chain():
    f = _icfg(
        {
            "functions": [
                _fn_doc(
                    "f",
                    [
                        {"id": "b0", "size": 1, "succs": ["b1"]},
                        {"id": "b1", "size": 1, "succs": ["b2"]},
                        {"id": "b2", "size": 1, "succs": []},
                    ],
                )
            ]
        }
    ).function("f")
    dt = build_dominator_tree(f)
    assert dt.idom == {"b1": "b0", "b2": "b1"}


def test_dominators_diamond():
    f = _icfg(
        {
            "functions": [
                _fn_doc(
                    "f",
                    [
                        {"id": "b0", "size": 1, "succs": ["b1", "b2"]},
                        {"id": "b1", "size": 1, "succs": ["b3"]},
                        {"id": "b2", "size": 1, "succs": ["b3"]},
                        {"id": "b3", "size": 1, "succs": []},
                    ],
                )
            ]
        }
    ).function("f")
    dt = build_dominator_tree(f)
    assert dt.idom["b3"] == "b0"
    assert sorted(dt.descendants("b0")) == ["b1", "b2", "b3"]
    assert dt.descendants("b1") == []


def test_unreachable_blocks_reported_not_in_tree():
    f = _icfg(
        {
            "functions": [
                _fn_doc(
                    "f",
                    [
                        {"id": "b0", "size": 1, "succs": []},
                        {"id": "dead", "size": 1, "succs": ["b0"]},
                    ],
                )
            ]
        }
    ).function("f")
    dt = build_dominator_tree(f)
    assert dt.unreachable == ("dead",)
    assert "dead" not in dt


def test_dominators_match_removal_oracle_on_random_functions():
    rng = random.Random(1234)
    for _ in range(120):
        doc = random_function_doc(rng, "f", max_blocks=30)
        f = parse_icfg_doc({"functions": [doc]}).function("f")
        dt = build_dominator_tree(f)
        assert dict(dt.idom) == oracle_idoms(f)


# -- call graph --------------------------------------------------------------


def _two_fn_icfg():
    return _icfg(
        {
            "functions": [
                _fn_doc(
                    "f",
                    [
                        {
                            "id": "b0",
                            "size": 2,
                            "succs": [],
                            "calls": [
                                {"kind": "direct", "target": "g"},
                                {"kind": "indirect", "site": "s0"},
                            ],
                        }
                    ],
                ),
                _fn_doc("g", [{"id": "b0", "size": 1, "succs": []}]),
                _fn_doc("h", [{"id": "b0", "size": 1, "succs": []}]),
            ]
        }
    )


def test_augment_without_edges_counts_static_sites():
    icfg = _two_fn_icfg()
    cg = augment_call_graph(icfg, [])
    assert cg.caller_count("g") == 1
    assert cg.caller_count("h") == 0
    assert cg.direct_caller_count("g") == 1


def test_augment_deduplicates_same_binding():
    icfg = _two_fn_icfg()
    edges = [
        DynamicCallEdge(site="s0", caller="f", target="g", count=3),
        DynamicCallEdge(site="s0", caller="f", target="g", count=5),
    ]
    cg = augment_call_graph(icfg, edges)
    assert cg.caller_count("g") == 2  # one direct site plus one indirect binding
    assert cg.direct_caller_count("g") == 1
    assert cg.edges == (DynamicCallEdge(site="s0", caller="f", target="g", count=8),)


def test_augment_multiple_targets_one_site():
    icfg = _two_fn_icfg()
    edges = [
        DynamicCallEdge(site="s0", caller="f", target="g", count=1),
        DynamicCallEdge(site="s0", caller="f", target="h", count=1),
    ]
    cg = augment_call_graph(icfg, edges)
    assert cg.caller_count("h") == 1
    assert set(cg.calls_from_block("f", "b0")) == {"g", "h"}


def test_augment_idempotent():
    icfg = _two_fn_icfg()
    edges = [DynamicCallEdge(site="s0", caller="f", target="h", count=2)]
    once = augment_call_graph(icfg, edges)
    twice = augment_call_graph(icfg, once.edges)
    assert once.edges == twice.edges
    assert once.incoming == twice.incoming


def _callgraph_reachable(cg, roots):
    seen = set()
    stack = list(roots)
    while stack:
        fn = stack.pop()
        if fn in seen:
            continue
        seen.add(fn)
        stack.extend(cg.callees(fn))
    return seen


def test_augment_monotone_on_random_programs():
    rng = random.Random(77)
    for _ in range(40):
        icfg, edges, _snap = random_program(rng)
        base = augment_call_graph(icfg, [])
        grown = augment_call_graph(icfg, edges)
        for f in icfg.functions:
            assert grown.caller_count(f.name) >= base.caller_count(f.name)
        roots = [icfg.functions[0].name]
        assert _callgraph_reachable(base, roots) <= _callgraph_reachable(grown, roots)


def test_augment_makes_dispatch_targets_reachable():
    icfg = parse_icfg_doc(dispatch_doc())
    before = _callgraph_reachable(augment_call_graph(icfg, []), ["main"])
    assert before == {"main"}
    cg = augment_call_graph(
        icfg,
        [
            DynamicCallEdge("s_dispatch", "main", "proj_merc", 1),
            DynamicCallEdge("s_dispatch", "main", "proj_tmerc", 1),
        ],
    )
    after = _callgraph_reachable(cg, ["main"])
    assert after == {"main", "proj_merc", "proj_tmerc"}


def test_augment_rejects_unknown_site_and_target():
    icfg = _two_fn_icfg()
    with pytest.raises(AnalysisError, match="unknown indirect site s9"):
        augment_call_graph(icfg, [DynamicCallEdge("s9", "f", "g", 1)])
    with pytest.raises(AnalysisError, match="unknown call target nope"):
        augment_call_graph(icfg, [DynamicCallEdge("s0", "f", "nope", 1)])
    with pytest.raises(AnalysisError, match="belongs to f"):
        augment_call_graph(icfg, [DynamicCallEdge("s0", "g", "h", 1)])


def test_indirect_summary_counts():
    icfg = _two_fn_icfg()
    stats = indirect_call_summary(
        icfg,
        [
            DynamicCallEdge("s0", "f", "g", 1),
            DynamicCallEdge("s0", "f", "h", 4),
        ],
    )
    assert stats.total_call_sites == 2
    assert stats.indirect_call_sites == 1
    assert stats.discovered_targets == 2


def test_indirect_summary_no_sites():
    icfg = _icfg({"functions": [_fn_doc("f", [{"id": "b0", "size": 1, "succs": []}])]})
    stats = indirect_call_summary(icfg, [])
    assert stats.indirect_call_sites == 0
    assert stats.discovered_targets == 0


def test_indirect_summary_file_benchmark_shape():
    # 3604 call sites in total, 3 of them indirect, none discovered.
    n_direct = 3601
    callees = [_fn_doc(f"callee{i}", [{"id": "b0", "size": 1, "succs": []}]) for i in range(40)]
    calls = [{"kind": "direct", "target": f"callee{i % 40}"} for i in range(n_direct)]
    calls += [{"kind": "indirect", "site": f"s{i}"} for i in range(3)]
    main = _fn_doc("main", [{"id": "b0", "size": 1, "succs": [], "calls": calls}])
    icfg = parse_icfg_doc({"functions": [main] + callees})
    stats = indirect_call_summary(icfg, [])
    assert (stats.total_call_sites, stats.indirect_call_sites, stats.discovered_targets) == (
        3604,
        3,
        0,
    )


def test_dispatch_targets_reachable_only_after_augmentation():
    icfg = parse_icfg_doc(dispatch_doc())
    plain = augment_call_graph(icfg, [])
    assert plain.callees("main") == []
    cg = augment_call_graph(
        icfg, [DynamicCallEdge("s_dispatch", "main", "proj_merc", 2)]
    )
    assert cg.callees("main") == ["proj_merc"]


# -- callgraph log wire format ------------------------------------------------


def test_callgraph_log_roundtrip():
    text = (
        '{"site": "s0", "caller": "f", "target": "g", "count": 3}\n'
        '{"site": "s1", "caller": "f", "target": "h", "count": 1}\n'
    )
    edges = load_callgraph_log(text)
    assert len(edges) == 2
    assert dump_callgraph_log(edges) == text


def test_callgraph_log_bad_count():
    with pytest.raises(FormatError, match="line 1"):
        load_callgraph_log('{"site": "s0", "caller": "f", "target": "g", "count": 0}\n')
