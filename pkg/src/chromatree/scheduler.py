"""Deterministic interleaving scheduler.

Logical processes run as greenlets over a :class:`SimMemory` backend; each
shared-memory access yields to the scheduler, which grants one access (one
step) at a time.  Modes:

* ``RandomSchedule(seed)`` - seeded uniform choice among enabled processes;
* ``ScriptedSchedule(pids)`` - an explicit grant sequence;
* :func:`enumerate_interleavings` - exhaustive exploration that merges
  states reached along different interleavings by a structural fingerprint
  (schedule-independent record identities plus per-process observation
  hashes) and prunes symmetric interleavings of identical workloads.

After every step the attached checkers see the whole configuration; a
failing checker aborts the run with the trace prefix as the counterexample.
"""

from __future__ import annotations

import random
import sys
from itertools import permutations

import greenlet

from .runtime import SimMemory
from .tree import ChromaticTree, census

__all__ = [
    "CheckerViolation",
    "DepthBoundExceeded",
    "RandomSchedule",
    "ScriptedSchedule",
    "Simulation",
    "enumerate_interleavings",
    "census_bound_checker",
    "descriptor_state_checker",
    "format_trace",
    "parse_script",
]


class CheckerViolation(AssertionError):
    """An invariant failed mid-trace; carries the trace prefix."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = tuple(trace)


class DepthBoundExceeded(RuntimeError):
    pass


class RandomSchedule:
    def __init__(self, seed):
        self.seed = seed
        self._rng = random.Random(seed)

    def choose(self, step_index, enabled):
        return enabled[self._rng.randrange(len(enabled))]


class ScriptedSchedule:
    def __init__(self, pids):
        self.pids = list(pids)
        self._i = 0

    def choose(self, step_index, enabled):
        if self._i >= len(self.pids):
            raise IndexError("script exhausted before processes finished")
        pid = self.pids[self._i]
        self._i += 1
        if pid not in enabled:
            raise ValueError(f"scripted pid {pid} is not enabled")
        return pid


class _Proc:
    __slots__ = ("pid", "ops", "glet", "ctx", "pending", "done", "results",
                 "events", "in_update", "op_steps0")

    def __init__(self, pid, ops):
        self.pid = pid
        self.ops = list(ops)
        self.glet = None
        self.ctx = None
        self.pending = None
        self.done = False
        self.results = []
        self.events = []
        self.in_update = False
        self.op_steps0 = 0


class Simulation:
    """One workload under the deterministic scheduler.

    ``workloads`` is a list of per-process op lists [(kind, key), ...];
    ``prefill`` keys build the initial tree before time starts.
    """

    def __init__(self, workloads, prefill=(), checkers=(),
                 legacy_restart=False, perms=None):
        self.mem = SimMemory()
        if perms:
            self.mem.perms = list(perms)
        self.tree = ChromaticTree(self.mem, legacy_restart=legacy_restart)
        self.checkers = list(checkers)
        self.trace = []
        self.step_count = 0
        self.procs = {}
        self.workloads = [list(w) for w in workloads]
        self._started = False
        # build the initial tree outside simulated time
        self.mem.gate = lambda pid, kind, rec, field: None
        boot = self.tree.make_ctx("prefill")
        for k in prefill:
            self.tree.insert(boot, k)
        self.initial_keys = frozenset(prefill)
        self.mem.gate = self._gate
        for pid, ops in enumerate(self.workloads):
            self.procs[pid] = _Proc(pid, ops)

    # -- process side ---------------------------------------------------

    def _gate(self, pid, kind, rec, field):
        p = self.procs[pid]
        p.pending = (kind, rec, field)
        self._main.switch()

    def _body(self, p):
        ctx = self.tree.make_ctx(p.pid)
        p.ctx = ctx
        tree = self.tree
        for kind, key in p.ops:
            invoke = self.step_count
            p.in_update = kind != "find"
            p.op_steps0 = ctx.mem.steps
            if kind == "insert":
                result = tree.insert(ctx, key)
            elif kind == "delete":
                result = tree.delete(ctx, key)
            else:
                result = tree.find(ctx, key)
            p.in_update = False
            p.results.append(result)
            p.events.append((p.pid, kind, key, invoke, self.step_count,
                             result))
        p.done = True

    # -- scheduler side -------------------------------------------------

    def start(self):
        if self._started:
            raise RuntimeError("already started")
        self._started = True
        self._main = greenlet.getcurrent()
        for p in self.procs.values():
            p.glet = greenlet.greenlet(self._body)
            p.glet.switch(p)  # run free until the first gate (or the end)
            if p.glet.dead:
                p.done = True

    def enabled(self):
        return tuple(pid for pid, p in self.procs.items() if not p.done)

    def step(self, pid, check=True):
        """Grant one shared-memory access to pid.  ``check=False`` skips
        the configuration checkers (used when replaying a prefix whose
        configurations were already checked)."""
        p = self.procs[pid]
        if p.done:
            raise ValueError(f"process {pid} already finished")
        kind, rec, field = p.pending
        self.trace.append((self.step_count, pid, kind, self.mem.ident(rec)))
        self.step_count += 1
        self._main = greenlet.getcurrent()
        p.glet.switch()
        if p.glet.dead:
            p.done = True
        if check:
            for checker in self.checkers:
                msg = checker(self)
                if msg:
                    raise CheckerViolation(msg, self.trace)

    def run(self, schedule):
        """Drive to completion under the given schedule; returns the trace
        as a list of (step, pid, kind, record-id) tuples."""
        if not self._started:
            self.start()
        while True:
            enabled = self.enabled()
            if not enabled:
                return self.trace
            self.step(schedule.choose(self.step_count, enabled))

    def history(self):
        """All operation events, ordered by (invoke, pid)."""
        events = []
        for p in self.procs.values():
            events.extend(p.events)
        events.sort(key=lambda e: (e[3], e[0]))
        return tuple(events)

    def incomplete_updates(self):
        """Updates that have taken at least one step but not returned."""
        return sum(1 for p in self.procs.values()
                   if p.in_update and p.ctx is not None
                   and p.ctx.mem.steps > p.op_steps0)

    # -- state identity ---------------------------------------------------

    def fingerprint(self, perm_index=0):
        """State identity from the per-process observation chains.

        Every plain write in the engine is idempotent per cell (marked,
        allFrozen and a descriptor's terminal state are only ever set to
        one value) and every pointer change is a CAS whose outcome is
        observed, so the whole heap is a deterministic function of the
        joint observation chains; they alone identify the configuration.
        ``heap_fingerprint`` makes that explicit and is cross-checked in
        the tests.
        """
        perm = self.mem.perms[perm_index]
        return hash(tuple(sorted(
            (perm.get(p.pid, p.pid),
             p.ctx.mem.obs[perm_index] if p.ctx is not None else None,
             p.done)
            for p in self.procs.values())))

    def heap_fingerprint(self, perm_index=0):
        mem = self.mem
        perm = mem.perms[perm_index]
        heap = []
        for obj in mem.arena:
            sid = obj.sim_id
            mapped = (perm.get(sid[0], sid[0]), sid[1])
            if hasattr(obj, "MUTABLE_FIELDS"):  # tree node
                heap.append((mapped, obj.key, obj.weight,
                             _mapped_ident(mem, perm, obj.left),
                             _mapped_ident(mem, perm, obj.right),
                             _mapped_ident(mem, perm, obj.info),
                             obj.marked))
            else:  # descriptor
                heap.append((mapped, obj.state, obj.all_frozen))
        heap.sort(key=lambda t: (str(t[0][0]), t[0][1]))
        return hash(tuple(heap))

    def canonical_fingerprint(self):
        perms = self.mem.perms
        if len(perms) == 1:
            return self.fingerprint(0)
        return min(self.fingerprint(j) for j in range(len(perms)))


def _mapped_ident(mem, perm, value):
    sid = getattr(value, "sim_id", None)
    if sid is None:
        return value
    return (perm.get(sid[0], sid[0]), sid[1])


def _render_id(ident):
    if isinstance(ident, tuple):
        return f"{ident[0]}.{ident[1]}"
    return repr(ident)


def format_trace(trace):
    return "".join(f"{s} {p} {k} {_render_id(r)}\n" for s, p, k, r in trace)


def parse_script(text):
    """Scripted schedules reuse the trace format; only the pid column (or
    a bare pid per line) is honoured."""
    pids = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        pids.append(int(parts[1] if len(parts) > 1 else parts[0]))
    return ScriptedSchedule(pids)


# ----------------------------------------------------------------------
# standard configuration checkers

def census_bound_checker(sim):
    """|violations| must not exceed the number of in-flight updates."""
    c = len(census(sim.tree))
    inc = sim.incomplete_updates()
    if c > inc:
        return f"census has {c} violations but only {inc} updates in flight"
    return None


class descriptor_state_checker:
    """Descriptor states only move InProgress -> (Committed | Aborted) and
    then stay put."""

    def __init__(self):
        self.seen = {}

    def __call__(self, sim):
        for obj in sim.mem.arena:
            if hasattr(obj, "MUTABLE_FIELDS"):
                continue
            prev = self.seen.get(id(obj))
            cur = obj.state
            if prev is not None and prev != cur and prev != 0:
                return (f"descriptor {obj.sim_id} changed terminal state "
                        f"{prev} -> {cur}")
            self.seen[id(obj)] = cur
        return None


# ----------------------------------------------------------------------
# exhaustive exploration

def symmetry_perms(workloads):
    """Process permutations that map the workload onto itself."""
    n = len(workloads)
    perms = []
    for order in permutations(range(n)):
        if all(workloads[order[i]] == workloads[i] for i in range(n)):
            perms.append({i: order[i] for i in range(n)})
    return perms


def enumerate_interleavings(factory, depth_bound=600, symmetry=True,
                            on_terminal=None):
    """Explore every interleaving of the simulation built by ``factory``.

    ``factory(perms)`` must return a fresh, unstarted, identically-built
    Simulation.  States are merged by canonical fingerprint; interleavings
    are counted over the resulting graph, so merged and symmetric states
    are each counted once per distinct schedule.  Returns a dict with
    states, traces (schedule count), terminals, and max depth reached.
    """
    probe = factory([{}])
    perms = symmetry_perms(probe.workloads) if symmetry else [{}]
    if not perms:
        perms = [{}]

    visited = set()
    children = {}
    terminals = set()
    stats = {"replays": 0, "max_depth": 0}
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, depth_bound * 4 + 1000))

    def fresh():
        stats["replays"] += 1
        sim = factory(perms)
        sim.start()
        return sim

    def explore(sim, choices):
        fp = sim.canonical_fingerprint()
        if fp in visited:
            return fp
        visited.add(fp)
        if len(choices) > stats["max_depth"]:
            stats["max_depth"] = len(choices)
        enabled = sim.enabled()
        if not enabled:
            terminals.add(fp)
            children[fp] = ()
            if on_terminal is not None:
                on_terminal(sim)
            return fp
        if len(choices) >= depth_bound:
            raise DepthBoundExceeded(f"no terminal within {depth_bound} "
                                     f"steps")
        kids = []
        last = len(enabled) - 1
        for i, pid in enumerate(enabled):
            if i < last:
                s = fresh()
                for c in choices:
                    s.step(c, check=False)  # prefix already checked
            else:
                s = sim  # the current simulation advances down its branch
            s.step(pid)
            kids.append(explore(s, choices + (pid,)))
        children[fp] = tuple(kids)
        return fp

    counts = {}

    def count(fp):
        if fp in counts:
            return counts[fp]
        kids = children[fp]
        counts[fp] = 1 if not kids else sum(count(k) for k in kids)
        return counts[fp]

    try:
        root_fp = explore(fresh(), ())
        total = count(root_fp)
    finally:
        sys.setrecursionlimit(limit)
    return {
        "states": len(visited),
        "terminals": len(terminals),
        "traces": total,
        "max_depth": stats["max_depth"],
        "replays": stats["replays"],
        "perms": len(perms),
    }
