"""Concurrent chromatic tree.

Leaf-oriented relaxed-balance BST.  Every key lives in a leaf; internal
nodes carry separators.  Two sentinel internal nodes with key INF sit above
the user root so that every update has a grandparent.  Updates run as
optimistic attempts built from LLX/SCX; a failed attempt backtracks along
the saved search path instead of restarting from the top.

Balance is relaxed: updates may leave violations (a red-red edge or an
overweight node) which the same operation then repairs bottom-up through
the transformation catalog before returning.
"""

from __future__ import annotations

from .records import (INF, KeyIsSentinel, Node, SUCCESS, FAILED_LLX,
                      FAILED_SCX)
from .runtime import SequentialMemory
from .sync_core import (Context, IN_PROGRESS, committed_dummy, help_scx,
                        llx, scx)
from .transformations import fix_overweight, fix_redred

__all__ = ["ChromaticTree", "TreeContext", "census", "dump", "parse_dump"]


class TreeContext(Context):
    """Per-process handle: memory view, LLX links, and optional metrics."""

    __slots__ = ("metrics",)

    def __init__(self, pid, mem, metrics=None):
        super().__init__(pid, mem)
        self.metrics = metrics


class ChromaticTree:

    def __init__(self, memory=None, reclaimer=None, legacy_restart=False):
        self.memory = memory if memory is not None else SequentialMemory()
        self.reclaimer = reclaimer
        self.legacy_restart = legacy_restart
        self.dummy = self.memory.register(committed_dummy())

        def leaf():
            return self.memory.register(Node(INF, 1, None, None, self.dummy))

        # empty tree: entry node over two sentinel leaves
        self.entry = self.memory.register(
            Node(INF, 1, leaf(), leaf(), self.dummy))

    def make_ctx(self, pid, metrics=None):
        return TreeContext(pid, self.memory.view(pid), metrics)

    def retire(self, ctx, nodes):
        if self.reclaimer is not None:
            for n in nodes:
                self.reclaimer.retire(n)

    # ------------------------------------------------------------------
    # queries

    def find(self, ctx, key):
        """True iff key is present.  Wait-free: a plain read-only descent."""
        _check_key(key)
        met = ctx.metrics
        if met is not None:
            met.begin(ctx, "find", key)
        l = ctx.mem.descend(self.entry, key)
        found = l.key == key
        if met is not None:
            met.end(ctx, found)
        return found

    # ------------------------------------------------------------------
    # updates

    def insert(self, ctx, key):
        """Add key; False if already present."""
        _check_key(key)
        met = ctx.metrics
        if met is not None:
            met.begin(ctx, "insert", key)
        stack = []
        ret = None
        try:
            while True:
                gp, p, l = self._search(ctx, key, stack)
                if l.key == key:
                    ret = False
                    return ret
                res, violation = self._try_insert(ctx, p, l, key)
                if res is SUCCESS:
                    if violation:
                        self._cleanup(ctx, key)
                    ret = True
                    return ret
                if met is not None:
                    met.contend(ctx)
                if self.legacy_restart:
                    stack.clear()
        finally:
            if met is not None:
                met.end(ctx, ret)

    def delete(self, ctx, key):
        """Remove key; False if absent."""
        _check_key(key)
        met = ctx.metrics
        if met is not None:
            met.begin(ctx, "delete", key)
        stack = []
        ret = None
        try:
            while True:
                gp, p, l = self._search(ctx, key, stack)
                if l.key != key:
                    ret = False
                    return ret
                res, violation = self._try_delete(ctx, gp, p, l)
                if res is SUCCESS:
                    if violation:
                        self._cleanup(ctx, key)
                    ret = True
                    return ret
                if met is not None:
                    met.contend(ctx)
                if self.legacy_restart:
                    stack.clear()
        finally:
            if met is not None:
                met.end(ctx, ret)

    # ------------------------------------------------------------------
    # internals

    def _search(self, ctx, key, stack):
        """Descend to the leaf for key, resuming from the saved path.
        Returns (grandparent, parent, leaf); the stack keeps the rest of
        the path for the next attempt."""
        mem = ctx.mem
        met = ctx.metrics
        if not stack:
            l = self.entry
        else:
            l = stack.pop()
            if met is not None:
                met.pops_up += 1
        while mem.read(l, "marked"):
            linfo = mem.read(l, "info")
            if mem.read(linfo, "state") == IN_PROGRESS:
                help_scx(mem, linfo)
            l = stack.pop()
            if met is not None:
                met.pops_up += 1
        while True:
            child = mem.read(l, "left")
            if child is None:
                break
            stack.append(l)
            if met is not None:
                met.pushes_up += 1
            l = child if key < l.key else mem.read(l, "right")
        p = stack.pop()
        if met is not None:
            met.pops_up += 1
        gp = stack[-1] if stack else None
        return gp, p, l

    def _try_insert(self, ctx, p, l, key):
        met = ctx.metrics
        if met is not None:
            met.attempts_up += 1
        sp = llx(ctx, p)
        if type(sp) is not tuple:
            return FAILED_LLX, False
        if sp[0] is l:
            side = "left"
        elif sp[1] is l:
            side = "right"
        else:
            return FAILED_LLX, False
        sl = llx(ctx, l)
        if type(sl) is not tuple:
            return FAILED_LLX, False
        mem = ctx.mem
        dummy = self.dummy
        weight = 1 if p.key == INF else l.weight - 1
        new_leaf = mem.register(Node(key, 1, None, None, dummy))
        old_leaf = mem.register(Node(l.key, 1, None, None, dummy))
        if key < l.key:
            n = Node(l.key, weight, new_leaf, old_leaf, dummy)
        else:
            n = Node(key, weight, old_leaf, new_leaf, dummy)
        mem.register(n)
        if scx(ctx, (p, l), (l,), p, side, n, "INSERT"):
            self.retire(ctx, (l,))
            violation = weight == 0 and p.weight == 0
            return SUCCESS, violation
        return FAILED_SCX, False

    def _try_delete(self, ctx, gp, p, l):
        met = ctx.metrics
        if met is not None:
            met.attempts_up += 1
        sgp = llx(ctx, gp)
        if type(sgp) is not tuple:
            return FAILED_LLX, False
        if sgp[0] is p:
            side = "left"
        elif sgp[1] is p:
            side = "right"
        else:
            return FAILED_LLX, False
        sp = llx(ctx, p)
        if type(sp) is not tuple:
            return FAILED_LLX, False
        if sp[0] is l:
            s = sp[1]
        elif sp[1] is l:
            s = sp[0]
        else:
            return FAILED_LLX, False
        sl = llx(ctx, l)
        if type(sl) is not tuple:
            return FAILED_LLX, False
        ssib = llx(ctx, s)
        if type(ssib) is not tuple:
            return FAILED_LLX, False
        weight = 1 if gp.key == INF else p.weight + s.weight
        n = ctx.mem.register(
            Node(s.key, weight, ssib[0], ssib[1], self.dummy))
        if scx(ctx, (gp, p, l, s), (p, l, s), gp, side, n, "DELETE"):
            self.retire(ctx, (p, l, s))
            violation = gp.key != INF and p.weight > 0 and s.weight > 0
            return SUCCESS, violation
        return FAILED_SCX, False

    def _cleanup(self, ctx, key):
        """Walk towards key fixing the first violation on the path, until
        the path is clean.  Each successful or failed rebalancing attempt
        resumes from the saved path rather than the top."""
        mem = ctx.mem
        met = ctx.metrics
        stack = []
        while True:
            if not stack:
                l = self.entry
            else:
                l = stack.pop()
                if met is not None:
                    met.pops_cp += 1
            while mem.read(l, "marked"):
                linfo = mem.read(l, "info")
                if mem.read(linfo, "state") == IN_PROGRESS:
                    help_scx(mem, linfo)
                l = stack.pop()
                if met is not None:
                    met.pops_cp += 1
            while True:
                lw = l.weight
                if lw > 1 or (lw == 0 and stack and stack[-1].weight == 0):
                    p = stack.pop()
                    gp = stack.pop() if stack else None
                    ggp = stack[-1] if stack else None
                    if met is not None:
                        met.pops_cp += 2 if gp is not None else 1
                    self._try_rebalance(ctx, ggp, gp, p, l)
                    if self.legacy_restart:
                        stack.clear()
                    break
                child = mem.read(l, "left")
                if child is None:
                    return
                stack.append(l)
                if met is not None:
                    met.pushes_cp += 1
                l = child if key < l.key else mem.read(l, "right")

    def _try_rebalance(self, ctx, ggp, gp, p, l):
        met = ctx.metrics
        if met is not None:
            met.attempts_cp += 1
        if l.weight > 1:
            res, tag = fix_overweight(self, ctx, gp, p, l)
        else:
            res, tag = fix_redred(self, ctx, ggp, gp, p, l)
        if met is not None:
            if res is SUCCESS:
                met.rebalanced(tag)
            met.contend(ctx)
        return res, tag

    # ------------------------------------------------------------------
    # whole-tree inspection (quiescent use)

    def nodes(self):
        """Pre-order (node, depth, parent) walk by direct reads."""
        stack = [(self.entry, 0, None)]
        while stack:
            node, depth, parent = stack.pop()
            yield node, depth, parent
            if node.left is not None:
                stack.append((node.right, depth + 1, node))
                stack.append((node.left, depth + 1, node))

    def keys(self):
        return sorted(n.key for n, _, _ in self.nodes()
                      if n.left is None and n.key != INF)

    def size(self):
        return sum(1 for n, _, _ in self.nodes()
                   if n.left is None and n.key != INF)

    def height(self):
        """Height of the user tree (root at the entry node's left chain)."""
        root = self.entry.left
        if root is not None and root.key == INF:
            root = root.left  # second sentinel present
        if root is None or root.key == INF:
            return 0
        best = 0
        stack = [(root, 1)]
        while stack:
            node, h = stack.pop()
            if node.left is None:
                best = max(best, h)
            else:
                stack.append((node.left, h + 1))
                stack.append((node.right, h + 1))
        return best


def census(tree):
    """Multiset of outstanding violations, as a sorted tuple of
    (kind, key, weight) entries; overweight nodes contribute
    ``weight - 1`` units.  Sentinel (key INF) nodes are exempt."""
    out = []
    for node, _, parent in tree.nodes():
        if node.key == INF and node.left is None:
            continue
        w = node.weight
        if w > 1:
            out.extend([("overweight", node.key, w)] * (w - 1))
        elif w == 0 and parent is not None and parent.weight == 0:
            out.append(("redred", node.key, 0))
    return tuple(sorted(out))


def dump(tree):
    """Deterministic pre-order text rendering, one node per line:
    ``depth key weight marked`` with key INF rendered as INF."""
    lines = []
    for node, depth, _ in tree.nodes():
        k = "INF" if node.key == INF else str(node.key)
        lines.append(f"{depth} {k} {node.weight} {int(node.marked)}")
    return "\n".join(lines) + "\n"


def parse_dump(text):
    """Inverse of :func:`dump`: rebuild a detached node structure.
    Returns the entry node of a shape usable by the verifier."""
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d, k, w, m = line.split()
        rows.append((int(d), INF if k == "INF" else int(k), int(w),
                     bool(int(m))))
    if not rows or rows[0][0] != 0:
        raise ValueError("malformed dump")
    path = []
    root = None
    for d, k, w, m in rows:
        node = Node(k, w, None, None, None)
        node.marked = m
        if d == 0:
            if root is not None:
                raise ValueError("malformed dump: two roots")
            root = node
        else:
            if d > len(path):
                raise ValueError("malformed dump: depth out of order")
            parent = path[d - 1]
            if parent.left is None:
                parent.left = node
            elif parent.right is None:
                parent.right = node
            else:
                raise ValueError("malformed dump: node with three children")
        del path[d:]
        path.append(node)
    return root


def _check_key(key):
    if not isinstance(key, int) or not 0 <= key < INF:
        raise KeyIsSentinel(f"key must be an integer in [0, 2**64-2], "
                            f"got {key!r}")
