"""Oracles and checkers.

* structural validation of a quiescent tree (shape, key order, sentinel
  layout, balance conditions);
* a sorted-set oracle for sequential equivalence;
* an exact small-history linearizability checker (Wing-Gong style search
  with memoized pruning) plus a naive full-permutation cross-check;
* the theorem-level bound report (rebalancing count vs 3i+d-2, census vs
  in-flight updates, height/size/contention samples).

History events are tuples (process, kind, key, invoke, response, result)
with half-open step intervals: op A precedes op B iff A.response <=
B.invoke.  An absent-key find linearizes at its final leaf read, the same
convention as the present-key case.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import permutations

from .records import INF
from .tree import census, parse_dump

__all__ = [
    "StructuralViolation",
    "StructReport",
    "check_structure",
    "SortedSetOracle",
    "HistoryTooLarge",
    "check_linearizable",
    "brute_force_linearizable",
    "BoundViolation",
    "BoundReport",
    "check_bounds",
]


class StructuralViolation(AssertionError):
    pass


class HistoryTooLarge(ValueError):
    pass


class BoundViolation(AssertionError):
    def __init__(self, which, where):
        super().__init__(f"{which} violated at {where}")
        self.which = which
        self.where = where


# ----------------------------------------------------------------------
# structure

@dataclass
class StructReport:
    passed: bool
    n: int
    height: int
    census_size: int
    weighted_levels: tuple
    problems: tuple = ()

    def raise_if_failed(self):
        if not self.passed:
            raise StructuralViolation("; ".join(self.problems))
        return self


def check_structure(tree_or_dump):
    """Validate a quiescent tree (or its dump text): leaf orientation,
    BST key order, sentinel layout, C1 everywhere, C2 and the red-black
    height bound whenever no violations are outstanding."""
    if isinstance(tree_or_dump, str):
        entry = parse_dump(tree_or_dump)
    else:
        entry = tree_or_dump.entry
    problems = []

    def complain(msg):
        problems.append(msg)

    if entry.key != INF or entry.weight != 1:
        complain("entry node must have key INF and weight 1")

    # walk once collecting everything
    leaves = []
    wlevels = []
    user_root = _user_root(entry)
    # (node, parent, low, high, in-user-region, weighted level so far)
    stack = [(entry, None, 0, INF + 1, False, 0)]
    count = 0
    while stack:
        node, parent, low, high, in_user, wl = stack.pop()
        count += 1
        one_child = (node.left is None) != (node.right is None)
        if one_child:
            complain(f"{node!r} has exactly one child")
        if node is user_root:
            in_user = True
            wl = 0
            low, high = 0, INF
        if in_user:
            wl += node.weight
            if not low <= node.key < high:
                complain(f"{node!r} violates key order")
        if node.left is None and node.right is None:
            leaves.append(node)
            if node.key != INF:
                if node.weight < 1:
                    complain(f"leaf {node!r} is red (C1)")
                wlevels.append(wl)
            elif not in_user and node.weight != 1:
                complain(f"sentinel leaf {node!r} has weight "
                         f"{node.weight}")
        else:
            if node.key == INF and not in_user:
                # sentinel internals keep an INF leaf on the right
                r = node.right
                if r is not None and (r.key != INF
                                      or (r.left is None and r.weight != 1)):
                    complain(f"sentinel {node!r} lacks its INF leaf")
            if node.right is not None:
                stack.append((node.right, node, node.key, high, in_user, wl))
            if node.left is not None:
                stack.append((node.left, node, low, node.key, in_user, wl))

    cen = _census_of(entry)
    n = sum(1 for lf in leaves if lf.key != INF)
    height = _height_from(user_root)
    if not cen:
        if len(set(wlevels)) > 1:
            complain(f"unequal weighted levels {sorted(set(wlevels))} (C2)")
        if n > 0 and height > 2 * math.log2(n + 1) + 2:
            complain(f"height {height} exceeds red-black bound for n={n}")
    return StructReport(passed=not problems, n=n, height=height,
                        census_size=len(cen),
                        weighted_levels=tuple(sorted(set(wlevels))),
                        problems=tuple(problems))


def _user_root(entry):
    root = entry.left
    if root is not None and root.key == INF and root.left is not None:
        root = root.left
    if root is None or root.key == INF:
        return None
    return root


def _height_from(root):
    if root is None:
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


def _census_of(entry):
    class _Shim:
        def nodes(self):
            stk = [(entry, 0, None)]
            while stk:
                node, depth, parent = stk.pop()
                yield node, depth, parent
                if node.right is not None:
                    stk.append((node.right, depth + 1, node))
                if node.left is not None:
                    stk.append((node.left, depth + 1, node))
    return census(_Shim())


# ----------------------------------------------------------------------
# sequential oracle

class SortedSetOracle:
    """Reference semantics: a plain set of keys."""

    def __init__(self, keys=()):
        self.keys = set(keys)

    def apply(self, kind, key):
        if kind == "insert":
            if key in self.keys:
                return False
            self.keys.add(key)
            return True
        if kind == "delete":
            if key not in self.keys:
                return False
            self.keys.remove(key)
            return True
        if kind == "find":
            return key in self.keys
        raise ValueError(f"unknown op kind {kind!r}")


# ----------------------------------------------------------------------
# linearizability

MAX_HISTORY = 14


def check_linearizable(events, initial=()):
    """True iff the history has a linearization: a total order of the
    events, consistent with real-time precedence, that replays correctly
    against the sorted-set semantics.  Exact; exponential in the worst
    case, memoized on (remaining-operations, set-state)."""
    events = tuple(events)
    if len(events) > MAX_HISTORY:
        raise HistoryTooLarge(f"{len(events)} events > {MAX_HISTORY}")
    for ev in events:
        if ev[4] is None:
            raise ValueError("history has a pending operation")
    ids = tuple(range(len(events)))
    dead = set()  # memo of states with no completion

    def minimal(remaining):
        # ops that no other remaining op wholly precedes
        out = []
        for i in remaining:
            inv = events[i][3]
            if all(events[j][4] > inv for j in remaining if j != i):
                out.append(i)
        return out

    def search(remaining, keys):
        if not remaining:
            return True
        state = (remaining, keys)
        if state in dead:
            return False
        for i in minimal(remaining):
            _, kind, key, _, _, result = events[i]
            if kind == "insert":
                ok, nxt = key not in keys, keys | {key}
            elif kind == "delete":
                ok, nxt = key in keys, keys - {key}
            else:
                ok, nxt = key in keys, keys
            if ok == result:
                if search(remaining - {i}, nxt):
                    return True
        dead.add(state)
        return False

    return search(frozenset(ids), frozenset(initial))


def brute_force_linearizable(events, initial=()):
    """Same verdict as :func:`check_linearizable`, by trying every
    permutation.  Cross-check for small histories only."""
    events = tuple(events)
    for order in permutations(range(len(events))):
        # real-time order must be respected
        ok = True
        for a in range(len(order)):
            for b in range(a + 1, len(order)):
                if events[order[b]][4] <= events[order[a]][3]:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        oracle = SortedSetOracle(initial)
        if all(oracle.apply(events[i][1], events[i][2]) == events[i][5]
               for i in order):
            return True
    return not events


# ----------------------------------------------------------------------
# theorem-level bounds

@dataclass
class BoundReport:
    i: int = 0
    d: int = 0
    rebal_total: int = 0
    bound: int = 0
    bound_checked: bool = False
    census_max: int = 0
    incomplete_max: int = 0
    samples: list = field(default_factory=list)  # (height, c, n)

    def as_text(self):
        lines = [f"i={self.i}", f"d={self.d}",
                 f"rebal_total={self.rebal_total}", f"bound={self.bound}",
                 f"bound_checked={int(self.bound_checked)}",
                 f"census_max={self.census_max}",
                 f"incomplete_max={self.incomplete_max}"]
        for h, c, n in self.samples:
            lines.append(f"sample height={h} c={c} n={n}")
        return "\n".join(lines) + "\n"

    def as_json(self):
        return json.dumps({
            "i": self.i, "d": self.d, "rebal_total": self.rebal_total,
            "bound": self.bound, "bound_checked": self.bound_checked,
            "census_max": self.census_max,
            "incomplete_max": self.incomplete_max,
            "samples": self.samples}, sort_keys=True)


def check_bounds(run):
    """Validate theorem-level counters for one run.

    ``run`` needs: i, d (successful insert/delete counts), rebal_total
    (successful rebalancing SCXs), and optionally configs, a sequence of
    (census_size, incomplete_updates) pairs, and samples of (height, c, n).
    Raises BoundViolation; returns the BoundReport.
    """
    i = run["i"]
    d = run["d"]
    rebal = run["rebal_total"]
    report = BoundReport(i=i, d=d, rebal_total=rebal,
                         samples=list(run.get("samples", ())))
    if i > 0:
        report.bound = 3 * i + d - 2
        report.bound_checked = True
        if rebal > report.bound:
            raise BoundViolation(
                "rebalancing bound 3i+d-2",
                f"rebal={rebal} > {report.bound} (i={i}, d={d})")
    for idx, (c_size, inc) in enumerate(run.get("configs", ())):
        report.census_max = max(report.census_max, c_size)
        report.incomplete_max = max(report.incomplete_max, inc)
        if c_size > inc:
            raise BoundViolation("census vs incomplete updates",
                                 f"configuration {idx}: {c_size} > {inc}")
    return report
