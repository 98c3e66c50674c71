"""Each local restructuring, fired once on its handcrafted precondition,
must shift the violation census exactly the way its bookkeeping row says,
in both orientations."""

from __future__ import annotations

import pytest

from chromatree import census, dump
from chromatree.records import SUCCESS
from chromatree.verifier import check_structure

from patterns import FIXTURES, build_fixture, fire_fixture

CASES = [(name, mirror) for name in FIXTURES for mirror in (False, True)]


@pytest.mark.parametrize("name,mirror", CASES,
                         ids=[f"{n}-{'mirror' if m else 'plain'}"
                              for n, m in CASES])
def test_census_delta_matches_the_bookkeeping(name, mirror):
    tree, fx = build_fixture(name, mirror)
    assert census(tree) == tuple(sorted(fx["before"]())), \
        "fixture precondition is off"
    fire_fixture(tree, fx)
    assert census(tree) == tuple(sorted(fx["after"]()))


@pytest.mark.parametrize("name,mirror", CASES,
                         ids=[f"{n}-{'mirror' if m else 'plain'}"
                              for n, m in CASES])
def test_replaced_nodes_are_finalized(name, mirror):
    tree, fx = build_fixture(name, mirror)
    before = {id(n): n for n, _, _ in tree.nodes()}
    fire_fixture(tree, fx)
    after_ids = {id(n) for n, _, _ in tree.nodes()}
    for node in before.values():
        if id(node) not in after_ids and node.left is not None:
            # unlinked internal nodes must have been finalized by the SCX
            assert node.marked, f"{node!r} left the tree unmarked"


def test_all_thirteen_kinds_are_covered():
    tags = {FIXTURES[name](_Probe())["tag"] for name in FIXTURES}
    assert tags == {"INSERT", "DELETE", "BLK", "RB1", "RB2", "W1", "W2",
                    "W3", "W4", "W5", "W6", "W7", "PUSH"}


class _Probe:
    """Shape-free stand-in so the coverage test can read fixture tags."""

    def leaf(self, w):
        from chromatree import Node
        return Node(0, w, None, None, None)

    def node(self, w, left, right):
        from chromatree import Node
        return Node(0, w, left, right, None)


def test_fixture_preconditions_are_reachable_shapes():
    # every fixture tree must at least be a well-formed leaf-oriented BST
    for name in FIXTURES:
        tree, _ = build_fixture(name, mirror=False)
        report = check_structure(tree)
        structural = [p for p in report.problems
                      if "key order" in p or "one child" in p]
        assert not structural, (name, structural)


def test_failed_match_defers_to_the_outer_violation():
    # an overweight node whose sibling is red under a red parent must wait
    from chromatree import ChromaticTree, Node
    from chromatree.records import FAILED_MATCH
    from chromatree.transformations import fix_overweight
    tree = ChromaticTree()
    reg = tree.memory.register
    d = tree.dummy
    v = reg(Node(2, 2, None, None, d))
    sib = reg(Node(6, 0, reg(Node(4, 1, None, None, d)),
                   reg(Node(6, 1, None, None, d)), d))
    x = reg(Node(4, 0, v, sib, d))
    u = reg(Node(8, 1, x, reg(Node(8, 1, None, None, d)), d))
    tree.entry.left = u
    res, tag = fix_overweight(tree, tree.make_ctx(0), u, x, v)
    assert res is FAILED_MATCH and tag is None
