"""Hand-built node patterns shared by the transformation tests.

Each fixture constructs the precondition neighborhood of one local
restructuring below a fresh tree's entry node, fires exactly one attempt
at it, and states the violation census expected before and afterwards.
Shapes are written once in their left orientation; the mirrored variant is
obtained by swapping every internal node's children before keys are
assigned, so both orientations share one recipe.
"""

from __future__ import annotations

import random

from chromatree import ChromaticTree, Node
from chromatree.records import SUCCESS
from chromatree.transformations import fix_overweight, fix_redred

__all__ = ["FIXTURES", "build_fixture", "fire_fixture", "gen_history"]


def _reflect(node):
    if node.left is not None:
        node.left, node.right = node.right, node.left
        _reflect(node.left)
        _reflect(node.right)


def _assign_keys(root):
    """In-order keys: leaves get 2, 4, 6, ...; an internal node gets the
    smallest key of its right subtree, which is the leaf-oriented BST
    separator convention."""
    counter = [2]

    def walk(n):
        if n.left is None:
            n.key = counter[0]
            counter[0] += 2
            return n.key
        low = walk(n.left)
        n.key = walk(n.right)
        return low

    walk(root)


def ow(node, weight=None):
    """Census entries contributed by one overweight node."""
    w = node.weight if weight is None else weight
    return [("overweight", node.key, w)] * (w - 1)


def rr(node):
    return [("redred", node.key, 0)]


class _Build:
    """Tiny node factory bound to one tree."""

    def __init__(self, tree):
        self.tree = tree

    def leaf(self, w):
        return self.tree.memory.register(
            Node(0, w, None, None, self.tree.dummy))

    def node(self, w, left, right):
        return self.tree.memory.register(
            Node(0, w, left, right, self.tree.dummy))


# Every fixture returns a dict with:
#   root     subtree to hang off the entry node
#   fire     fire(tree, ctx) -> (result, tag)
#   tag      expected transformation tag
#   before   callable -> census expected before firing
#   after    callable -> census expected after firing
# The before/after callables run after key assignment, so they may read
# node keys.

def _fx_insert_redred(b):
    l = b.leaf(1)
    p = b.node(0, l, b.leaf(1))
    root = b.node(1, p, b.leaf(1))
    return {
        "root": root, "tag": "INSERT",
        "fire": lambda t, c: (t._try_insert(c, p, l, l.key - 1)[0],
                              "INSERT"),
        "before": lambda: [],
        # the replacement internal node inherits the larger key and the
        # decremented weight, turning red under its red parent
        "after": lambda: [("redred", l.key, 0)],
    }


def _fx_insert_overweight(b):
    l = b.leaf(3)
    p = b.node(1, l, b.leaf(1))
    root = b.node(1, p, b.leaf(1))
    return {
        "root": root, "tag": "INSERT",
        "fire": lambda t, c: (t._try_insert(c, p, l, l.key - 1)[0],
                              "INSERT"),
        "before": lambda: ow(l),
        "after": lambda: [("overweight", l.key, 2)],
    }


def _fx_delete_overweight(b):
    l = b.leaf(1)
    s = b.leaf(1)
    p = b.node(1, l, s)
    gp = b.node(1, p, b.leaf(1))
    return {
        "root": gp, "tag": "DELETE",
        "fire": lambda t, c: (t._try_delete(c, gp, p, l)[0], "DELETE"),
        "before": lambda: [],
        # n absorbs p.w + s.w = 2
        "after": lambda: [("overweight", s.key, 2)],
    }


def _fx_delete_redred(b):
    l = b.leaf(0)
    s = b.leaf(1)
    p = b.node(0, l, s)
    gp = b.node(1, p, b.leaf(1))
    return {
        "root": gp, "tag": "DELETE",
        "fire": lambda t, c: (t._try_delete(c, gp, p, l)[0], "DELETE"),
        "before": lambda: rr(l),
        "after": lambda: [],
    }


def _fx_blk(b):
    v = b.leaf(0)
    p = b.node(0, v, b.leaf(1))
    s = b.node(0, b.leaf(1), b.leaf(1))
    x = b.node(1, p, s)
    u = b.node(1, x, b.leaf(1))
    return {
        "root": u, "tag": "BLK",
        "fire": lambda t, c: fix_redred(t, c, u, x, p, v),
        "before": lambda: rr(v),
        "after": lambda: [],
    }


def _fx_blk_moved(b):
    # the recoloured grandparent drops to weight 0 under a weight-0 node,
    # so the red-red violation moves up rather than disappearing
    v = b.leaf(0)
    p = b.node(0, v, b.leaf(1))
    s = b.node(0, b.leaf(1), b.leaf(1))
    x = b.node(1, p, s)
    u = b.node(0, x, b.leaf(1))
    top = b.node(1, u, b.leaf(1))
    return {
        "root": top, "tag": "BLK",
        "fire": lambda t, c: fix_redred(t, c, u, x, p, v),
        "before": lambda: rr(v),
        "after": lambda: [("redred", x.key, 0)],
    }


def _fx_rb1(b):
    v = b.leaf(0)
    p = b.node(0, v, b.leaf(1))
    x = b.node(1, p, b.leaf(1))
    u = b.node(1, x, b.leaf(1))
    return {
        "root": u, "tag": "RB1",
        "fire": lambda t, c: fix_redred(t, c, u, x, p, v),
        "before": lambda: rr(v),
        "after": lambda: [],
    }


def _fx_rb2(b):
    v = b.node(0, b.leaf(1), b.leaf(1))
    p = b.node(0, b.leaf(1), v)
    x = b.node(1, p, b.leaf(1))
    u = b.node(1, x, b.leaf(1))
    return {
        "root": u, "tag": "RB2",
        "fire": lambda t, c: fix_redred(t, c, u, x, p, v),
        "before": lambda: rr(v),
        "after": lambda: [],
    }


def _ow_frame(b, v, sib):
    x = b.node(1, v, sib)
    u = b.node(1, x, b.leaf(1))
    return u, x


def _fx_w1(b):
    v = b.leaf(3)
    cn = b.leaf(3)
    sib = b.node(0, cn, b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W1",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v) + ow(cn),
        "after": lambda: [("overweight", cn.key, 2),
                          ("overweight", v.key, 2)],
    }


def _fx_w2(b):
    v = b.leaf(2)
    cn = b.node(1, b.leaf(1), b.leaf(1))
    sib = b.node(0, cn, b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W2",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


def _fx_w3(b):
    v = b.leaf(2)
    d = b.node(0, b.leaf(1), b.leaf(1))
    cn = b.node(1, d, b.leaf(1))
    sib = b.node(0, cn, b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W3",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


def _fx_w4(b):
    v = b.leaf(2)
    cn = b.node(1, b.leaf(1), b.leaf(0))
    sib = b.node(0, cn, b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W4",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


def _fx_w5(b):
    v = b.leaf(2)
    sib = b.node(1, b.leaf(1), b.leaf(0))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W5",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


def _fx_w6(b):
    v = b.leaf(2)
    cn = b.node(0, b.leaf(1), b.leaf(1))
    sib = b.node(1, cn, b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W6",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


def _fx_w7(b):
    v = b.leaf(3)
    sib = b.leaf(2)
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "W7",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v) + ow(sib),
        # both children shed one unit; the new top absorbs one
        "after": lambda: [("overweight", v.key, 2),
                          ("overweight", x.key, 2)],
    }


def _fx_w7_red_top(b):
    v = b.leaf(2)
    sib = b.leaf(2)
    x = b.node(0, v, sib)
    u = b.node(1, x, b.leaf(1))
    return {
        "root": u, "tag": "W7",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v) + ow(sib),
        # the red top soaks up the unit shed by both children
        "after": lambda: [],
    }


def _fx_push(b):
    v = b.leaf(2)
    sib = b.node(1, b.leaf(1), b.leaf(1))
    u, x = _ow_frame(b, v, sib)
    return {
        "root": u, "tag": "PUSH",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [("overweight", x.key, 2)],
    }


def _fx_push_red_top(b):
    v = b.leaf(2)
    sib = b.node(1, b.leaf(1), b.leaf(1))
    x = b.node(0, v, sib)
    u = b.node(1, x, b.leaf(1))
    return {
        "root": u, "tag": "PUSH",
        "fire": lambda t, c: fix_overweight(t, c, u, x, v),
        "before": lambda: ow(v),
        "after": lambda: [],
    }


FIXTURES = {
    "insert-redred": _fx_insert_redred,
    "insert-overweight": _fx_insert_overweight,
    "delete-overweight": _fx_delete_overweight,
    "delete-redred": _fx_delete_redred,
    "blk": _fx_blk,
    "blk-moved": _fx_blk_moved,
    "rb1": _fx_rb1,
    "rb2": _fx_rb2,
    "w1": _fx_w1,
    "w2": _fx_w2,
    "w3": _fx_w3,
    "w4": _fx_w4,
    "w5": _fx_w5,
    "w6": _fx_w6,
    "w7": _fx_w7,
    "w7-red-top": _fx_w7_red_top,
    "push": _fx_push,
    "push-red-top": _fx_push_red_top,
}


def build_fixture(name, mirror):
    tree = ChromaticTree()
    fx = FIXTURES[name](_Build(tree))
    if mirror:
        _reflect(fx["root"])
    _assign_keys(fx["root"])
    tree.entry.left = fx["root"]
    return tree, fx


def fire_fixture(tree, fx):
    ctx = tree.make_ctx(0)
    res, tag = fx["fire"](tree, ctx)
    assert res is SUCCESS, f"{fx['tag']} attempt failed: {res}"
    assert tag == fx["tag"], f"matched {tag}, expected {fx['tag']}"
    return tag


# ----------------------------------------------------------------------
# random small histories for the linearizability cross-check

def gen_history(rng, max_events=6):
    """A random complete history over keys {0, 1}: up to three processes,
    up to three sequential ops each, random interleaving, random (often
    wrong) results.  Returns None when the draw exceeds max_events."""
    streams = []
    for _ in range(rng.randint(1, 3)):
        streams.append([(rng.choice(("insert", "delete", "find")),
                         rng.randrange(2))
                        for _ in range(rng.randint(1, 3))])
    if sum(len(s) for s in streams) > max_events:
        return None
    pending = {p: [(p, j, t) for j in range(len(ops)) for t in (0, 1)]
               for p, ops in enumerate(streams)}
    marks = {}
    clock = 0
    while pending:
        p = rng.choice(sorted(pending))
        marks[pending[p].pop(0)] = clock
        clock += 1
        if not pending[p]:
            del pending[p]
    events = []
    for p, ops in enumerate(streams):
        for j, (kind, key) in enumerate(ops):
            events.append((p, kind, key, marks[(p, j, 0)],
                           marks[(p, j, 1)], rng.random() < 0.5))
    return tuple(events)
