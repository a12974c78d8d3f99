from __future__ import annotations

import numpy as np
import pytest

from hypercore.trees import CodeInterner, Forest, StructureError, concat_forests, parse_tree


def star():
    # root with one factor child holding two variables
    return Forest(3, [np.array([-1]), np.array([0]), np.array([0, 0])])


def test_forest_shape_queries():
    f = star()
    assert f.n_trees == 1 and f.depth == 2 and f.n_nodes == 4
    assert f.child_counts(0).tolist() == [1]
    assert f.child_counts(1).tolist() == [2]
    nodes = f.nodes()
    assert [n["kind"] for n in nodes] == ["variable", "factor", "variable", "variable"]
    assert nodes[1]["children"] == [2, 3] and nodes[2]["parent"] == 1
    f.check_arity()


def test_text_roundtrip_and_canonical_order():
    text = "(v:1 (f:0 (v:0) (v:1)) (f:1 (v:1) (v:1)))"
    f = parse_tree(text, 3)
    assert f.label_kind == "bit"
    assert f.to_text() == [text]
    shuffled = parse_tree("(v:1 (f:1 (v:1) (v:1)) (f:0 (v:1) (v:0)))", 3)
    assert shuffled.to_text() == [text]


def test_parse_errors():
    with pytest.raises(StructureError):
        parse_tree("(v:1 (f:1)", 3)
    with pytest.raises(StructureError):
        parse_tree("(f:1)", 3)
    with pytest.raises(StructureError):
        parse_tree("(v:1 (f:10))", 3)


def test_arity_check():
    bad = Forest(3, [np.array([-1]), np.array([0]), np.array([0]), np.array([], dtype=np.int64)])
    with pytest.raises(StructureError):
        bad.check_arity()


def test_tree_extraction_and_concat():
    a = parse_tree("(v:0 (f:0 (v:0) (v:1)))", 3)
    b = parse_tree("(v:1 (f:1 (v:1) (v:1)) (f:0 (v:0) (v:1)))", 3)
    both = concat_forests([a, b])
    assert both.n_trees == 2
    assert both.to_text() == a.to_text() + b.to_text()
    assert both.tree(1).to_text() == b.to_text()
    assert both.tree(0).to_text() == a.to_text()


def test_interner_shares_ids_across_forests():
    interner = CodeInterner()
    a = parse_tree("(v:0 (f:0 (v:0) (v:1)))", 3)
    ids1 = interner.codes(a)
    ids2 = interner.codes(parse_tree("(v:0 (f:0 (v:1) (v:0)))", 3))
    assert ids1.tolist() == ids2.tolist()


def test_type9_alphabet():
    ok = parse_tree("(v:110 (f:111 (v:111) (v:111)))", 3)
    ok.check_alphabet()
    with pytest.raises(StructureError):
        parse_tree("(v:100)", 3).check_alphabet()
    with pytest.raises(StructureError):
        parse_tree("(v:000 (f:110 (v:000) (v:000)))", 3).check_alphabet()


def test_truncate():
    f = parse_tree("(v:1 (f:1 (v:1 (f:1 (v:1) (v:1))) (v:1)))", 3)
    assert f.truncate(2).to_text() == ["(v:1 (f:1 (v:1) (v:1)))"]
    assert f.truncate(0).to_text() == ["(v:1)"]
