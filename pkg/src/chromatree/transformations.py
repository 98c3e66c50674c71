"""Rebalancing transformation catalog.

Thirteen local restructurings (BLK, RB1, RB2, W1..W7, PUSH) plus the two
update shapes (INSERT, DELETE), each existing in a left and a mirrored
variant.  A transformation matches a small pattern of nodes around a
violation, snapshots them with LLX, builds a replacement subtree of fresh
nodes, and installs it with a single SCX that finalizes the replaced
nodes.

The code below writes each recipe once in its left orientation and runs it
through an orientation adapter: ``near`` is the child on the violating
node's side, ``far`` the other.  Replacement keys follow from the
separators that survive the restructuring, so the adapter handles mirrored
keys for free.

Weight conventions:

* a violating leaf-ward node ``v`` with ``v.weight > 1`` is overweight;
  a node with weight 0 whose parent also has weight 0 is a red-red
  violation;
* any replacement subtree root installed directly below a sentinel
  (parent key INF) is forced to weight 1, which is why the sentinels and
  the root stay black and overweight drains away at the top.
"""

from __future__ import annotations

from .records import (INF, Node, SUCCESS, FAILED_LLX, FAILED_SCX,
                      FAILED_NIL, FAILED_MATCH)
from .sync_core import llx, scx

__all__ = ["fix_overweight", "fix_redred", "REBALANCE_TAGS"]

REBALANCE_TAGS = ("BLK", "RB1", "RB2", "W1", "W2", "W3", "W4", "W5", "W6",
                  "W7", "PUSH")


def _snap(ctx, r):
    s = llx(ctx, r)
    return s if type(s) is tuple else None


class _Shaper:
    """Node factory oriented so that index ``m`` is the violating side."""

    __slots__ = ("m", "mem", "info")

    def __init__(self, m, mem, info):
        self.m = m
        self.mem = mem
        self.info = info

    def near(self, pair):
        return pair[self.m]

    def far(self, pair):
        return pair[1 - self.m]

    def make(self, key, weight, near_child, far_child):
        if self.m == 0:
            n = Node(key, weight, near_child, far_child, self.info)
        else:
            n = Node(key, weight, far_child, near_child, self.info)
        return self.mem.register(n)

    def copy(self, orig, weight, snapshot):
        # a copy keeps its absolute child order and key
        n = Node(orig.key, weight, snapshot[0], snapshot[1], self.info)
        return self.mem.register(n)


def fix_overweight(tree, ctx, u, x, v):
    """One attempt at the overweight violation on v (v.weight > 1), with
    parent x and grandparent u.  Dispatches to W1..W7 or PUSH."""
    mem = ctx.mem
    su = _snap(ctx, u)
    if su is None:
        return FAILED_LLX, None
    if su[0] is x:
        uside = "left"
    elif su[1] is x:
        uside = "right"
    else:
        return FAILED_LLX, None
    sx = _snap(ctx, x)
    if sx is None:
        return FAILED_LLX, None
    if sx[0] is v:
        m = 0
    elif sx[1] is v:
        m = 1
    else:
        return FAILED_LLX, None
    sib = sx[1 - m]
    sv = _snap(ctx, v)
    if sv is None:
        return FAILED_LLX, None
    ss = _snap(ctx, sib)
    if ss is None:
        return FAILED_LLX, None

    sh = _Shaper(m, mem, tree.dummy)
    xw, vw, sw = x.weight, v.weight, sib.weight
    top = 1 if u.key == INF else None  # forced weight below a sentinel

    if sw > 1:
        tag = "W7"
        n = sh.make(x.key, top or xw + 1,
                    sh.copy(v, vw - 1, sv), sh.copy(sib, sw - 1, ss))
        V = (u, x, v, sib)
    elif sw == 1:
        if ss[0] is None:
            return FAILED_NIL, None  # sibling is a leaf, nephews needed
        cn, cf = sh.near(ss), sh.far(ss)
        if cf.weight == 0:
            tag = "W5"
            scf = _snap(ctx, cf)
            if scf is None:
                return FAILED_LLX, None
            a = sh.make(x.key, 1, sh.copy(v, vw - 1, sv), cn)
            n = sh.make(sib.key, top or xw, a, sh.copy(cf, 1, scf))
            V = (u, x, v, sib, cf)
        elif cn.weight == 0:
            tag = "W6"
            scn = _snap(ctx, cn)
            if scn is None:
                return FAILED_LLX, None
            a = sh.make(x.key, 1, sh.copy(v, vw - 1, sv), sh.near(scn))
            b = sh.make(sib.key, 1, sh.far(scn), cf)
            n = sh.make(cn.key, top or xw, a, b)
            V = (u, x, v, sib, cn)
        else:
            tag = "PUSH"
            n = sh.make(x.key, top or xw + 1,
                        sh.copy(v, vw - 1, sv), sh.copy(sib, 0, ss))
            V = (u, x, v, sib)
    else:  # sw == 0
        if xw == 0:
            # red sibling under a red parent: a red-red violation sits
            # above this overweight one, let its cleanup run first
            return FAILED_MATCH, None
        if ss[0] is None:
            return FAILED_NIL, None
        cn, cf = sh.near(ss), sh.far(ss)
        if cn.weight > 1:
            tag = "W1"
            scn = _snap(ctx, cn)
            if scn is None:
                return FAILED_LLX, None
            a = sh.make(x.key, 1, sh.copy(v, vw - 1, sv),
                        sh.copy(cn, cn.weight - 1, scn))
            n = sh.make(sib.key, top or xw, a, cf)
            V = (u, x, v, sib, cn)
        elif cn.weight == 1:
            scn = _snap(ctx, cn)
            if scn is None:
                return FAILED_LLX, None
            if scn[0] is None:
                return FAILED_NIL, None  # W2..W4 need the grand-nephews
            d, e = sh.near(scn), sh.far(scn)
            if d.weight == 0:
                tag = "W3"
                sd = _snap(ctx, d)
                if sd is None:
                    return FAILED_LLX, None
                b = sh.make(x.key, 1, sh.copy(v, vw - 1, sv), sh.near(sd))
                c = sh.make(cn.key, 1, sh.far(sd), e)
                n = sh.make(sib.key, top or xw, sh.make(d.key, 0, b, c), cf)
                V = (u, x, v, sib, cn, d)
            elif e.weight == 0:
                tag = "W4"
                se = _snap(ctx, e)
                if se is None:
                    return FAILED_LLX, None
                a = sh.make(x.key, 1, sh.copy(v, vw - 1, sv), d)
                b = sh.make(sib.key, 0, sh.copy(e, 1, se), cf)
                n = sh.make(cn.key, top or xw, a, b)
                V = (u, x, v, sib, cn, e)
            else:
                tag = "W2"
                a = sh.make(x.key, 1, sh.copy(v, vw - 1, sv),
                            sh.copy(cn, 0, scn))
                n = sh.make(sib.key, top or xw, a, cf)
                V = (u, x, v, sib, cn)
        else:
            # red nephew under the red sibling: red-red nearby, retry
            return FAILED_MATCH, None

    if scx(ctx, V, V[1:], u, uside, n, tag):
        tree.retire(ctx, V[1:])
        return SUCCESS, tag
    return FAILED_SCX, tag


def fix_redred(tree, ctx, u, x, p, v):
    """One attempt at the red-red violation on v (v and its parent p both
    weight 0), with grandparent x and great-grandparent u.  Dispatches to
    BLK, RB1 or RB2."""
    mem = ctx.mem
    if u is None or x is None:
        return FAILED_LLX, None
    su = _snap(ctx, u)
    if su is None:
        return FAILED_LLX, None
    if su[0] is x:
        uside = "left"
    elif su[1] is x:
        uside = "right"
    else:
        return FAILED_LLX, None
    sx = _snap(ctx, x)
    if sx is None:
        return FAILED_LLX, None
    if sx[0] is p:
        m = 0
    elif sx[1] is p:
        m = 1
    else:
        return FAILED_LLX, None
    sibling = sx[1 - m]
    xw = x.weight
    if xw == 0:
        # then (x, p) is itself red-red and must be fixed higher up
        return FAILED_MATCH, None
    top = 1 if u.key == INF else None

    if sibling.weight == 0:
        # both children of x red: recolour.  Freeze order runs through the
        # child holding the first red grandchild (the center node).
        first, second = sx
        if not _holds_red_child(mem, first):
            first, second = second, first
        s1 = _snap(ctx, first)
        if s1 is None:
            return FAILED_LLX, None
        s2 = _snap(ctx, second)
        if s2 is None:
            return FAILED_LLX, None
        snap = {first: s1, second: s2}
        sxl, sxr = snap[sx[0]], snap[sx[1]]
        if not any(c.weight == 0 for c in sxl + sxr if c is not None):
            return FAILED_MATCH, None
        sh = _Shaper(0, mem, tree.dummy)
        n = sh.make(x.key, top or xw - 1,
                    sh.copy(sx[0], 1, sxl), sh.copy(sx[1], 1, sxr))
        if scx(ctx, (u, x, first, second), (x, sx[0], sx[1]), u, uside, n,
               "BLK"):
            tree.retire(ctx, (x, sx[0], sx[1]))
            return SUCCESS, "BLK"
        return FAILED_SCX, "BLK"

    sp = _snap(ctx, p)
    if sp is None:
        return FAILED_LLX, None
    if sp[0] is v:
        mv = 0
    elif sp[1] is v:
        mv = 1
    else:
        return FAILED_LLX, None
    sh = _Shaper(m, mem, tree.dummy)
    if mv == m:
        tag = "RB1"
        n = sh.make(p.key, top or xw, sh.near(sp),
                    sh.make(x.key, 0, sh.far(sp), sibling))
        V = (u, x, p)
    else:
        tag = "RB2"
        sv = _snap(ctx, v)
        if sv is None:
            return FAILED_LLX, None
        if sv[0] is None:
            return FAILED_NIL, None
        a = sh.make(p.key, 0, sh.near(sp), sh.near(sv))
        b = sh.make(x.key, 0, sh.far(sv), sibling)
        n = sh.make(v.key, top or xw, a, b)
        V = (u, x, p, v)
    if scx(ctx, V, V[1:], u, uside, n, tag):
        tree.retire(ctx, V[1:])
        return SUCCESS, tag
    return FAILED_SCX, tag


def _holds_red_child(mem, node):
    if node.is_leaf():
        return False
    lc = mem.read(node, "left")
    if lc is not None and lc.weight == 0:
        return True
    rc = mem.read(node, "right")
    return rc is not None and rc.weight == 0
