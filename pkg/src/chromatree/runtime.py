"""Shared-memory access layer.

Every mutable shared cell (a node's child pointers, its info reference and
marked flag, a descriptor's state and allFrozen flag) is touched through a
view object.  A view belongs to one logical process and counts each access
as one step.  Three backends exist:

* ``SequentialMemory`` - plain attribute access, for single-process runs.
* ``ThreadedMemory`` - the same, plus a lock that makes ``cas`` atomic
  under real preemptive threads.
* ``SimMemory`` - yields to a scheduler before every access, so a test
  harness decides the exact interleaving (see :mod:`chromatree.scheduler`).

Immutable payload (keys, weights, leaf-ness) is read directly via
attributes everywhere; only mutable cells count as steps.
"""

from __future__ import annotations

import os
import random
import threading

__all__ = [
    "MemoryView",
    "SequentialMemory",
    "ThreadedMemory",
    "SimMemory",
]

_getattr = getattr
_setattr = setattr


class MemoryView:
    """Per-process handle on shared memory.  Subclasses define the gating."""

    __slots__ = ("pid", "steps")

    def __init__(self, pid):
        self.pid = pid
        self.steps = 0

    def read(self, rec, field):
        raise NotImplementedError

    def write(self, rec, field, value):
        raise NotImplementedError

    def cas(self, rec, field, old, new):
        """Atomic compare-and-swap on identity (``is``)."""
        raise NotImplementedError

    def descend(self, node, key):
        """Leaf descent from ``node``: follow child pointers by key until
        a leaf, counting one step per pointer read."""
        read = self.read
        while True:
            child = read(node, "left")
            if child is None:
                return node
            node = child if key < node.key else read(node, "right")

    def register(self, obj):
        """Allocation hook; identity except under simulation."""
        return obj


class _PlainView(MemoryView):
    __slots__ = ()

    def read(self, rec, field):
        self.steps += 1
        return _getattr(rec, field)

    def descend(self, node, key):
        # single mutator, so direct attribute reads are fine; batching
        # the step counter keeps read-heavy descents cheap
        steps = 0
        while True:
            child = node.left
            steps += 1
            if child is None:
                self.steps += steps
                return node
            if key < node.key:
                node = child
            else:
                node = node.right
                steps += 1

    def write(self, rec, field, value):
        self.steps += 1
        _setattr(rec, field, value)


class _SequentialView(_PlainView):
    __slots__ = ()

    def cas(self, rec, field, old, new):
        self.steps += 1
        if _getattr(rec, field) is old:
            _setattr(rec, field, new)
            return True
        return False


class _ThreadedView(_PlainView):
    __slots__ = ("_lock", "_stress", "_rng", "_gate")

    def __init__(self, pid, lock, stress=0.0, gate=None):
        super().__init__(pid)
        self._lock = lock
        self._stress = stress
        self._rng = random.Random(hash((pid, 0x5eed))) if stress else None
        self._gate = gate

    def read(self, rec, field):
        # Preempt at synchronization-protocol accesses only, so update
        # windows overlap while plain traversal stays fast.
        if self._stress and field not in ("left", "right") \
                and self._rng.random() < self._stress:
            os.sched_yield()
        if self._gate is not None:
            self._gate(self.pid, "read", rec, field)
        self.steps += 1
        return _getattr(rec, field)

    def descend(self, node, key):
        # a gate wants to see every access, so fall back to the generic
        # read-by-read walk when one is installed
        if self._gate is not None:
            return MemoryView.descend(self, node, key)
        return _PlainView.descend(self, node, key)

    def write(self, rec, field, value):
        if self._gate is not None:
            self._gate(self.pid, "write", rec, field)
        self.steps += 1
        _setattr(rec, field, value)

    def cas(self, rec, field, old, new):
        if self._stress and field == "info" \
                and self._rng.random() < self._stress:
            os.sched_yield()
        if self._gate is not None:
            self._gate(self.pid, "cas", rec, field)
        self.steps += 1
        with self._lock:
            if _getattr(rec, field) is old:
                _setattr(rec, field, new)
                return True
            return False


class SequentialMemory:
    """Backend for single-process execution."""

    simulated = False

    def view(self, pid):
        return _SequentialView(pid)

    def register(self, obj):
        return obj


class ThreadedMemory:
    """Backend for real threads.  One lock serialises cas; plain reads and
    writes of single references are already atomic under the interpreter."""

    simulated = False

    def __init__(self, stress=0.0, gate=None):
        # stress is the probability of yielding the interpreter around a
        # synchronization access, which forces real overlap between update
        # windows on a single core.  gate, if given, is called with
        # (pid, kind, record, field) before every access and may block the
        # calling thread; both leave step counts untouched.
        self._cas_lock = threading.Lock()
        self._stress = stress
        self._gate = gate

    def view(self, pid):
        return _ThreadedView(pid, self._cas_lock, self._stress, self._gate)

    def register(self, obj):
        return obj


def _map_ident(perm, ident):
    if type(ident) is tuple:  # a (pid, seq) record identity
        return (perm.get(ident[0], ident[0]), ident[1])
    return ident


class _SimView(MemoryView):
    __slots__ = ("_core", "obs", "_alloc_seq")

    def __init__(self, pid, core):
        super().__init__(pid)
        self._core = core
        # Rolling hash of everything this process has observed, one per
        # symmetry permutation.  Two runs in which a process saw the same
        # observation sequence leave it at the same local state, which is
        # what lets the explorer merge states.
        self.obs = [0] * len(core.perms)
        self._alloc_seq = 0

    def register(self, obj):
        # (pid, per-process sequence) is independent of the interleaving
        obj.sim_id = (self.pid, self._alloc_seq)
        self._alloc_seq += 1
        self._core.arena.append(obj)
        return obj

    def _note(self, kind, rec, field, result):
        rid = self._core.ident(rec)
        obs = self.obs
        for j, perm in enumerate(self._core.perms):
            obs[j] = hash((obs[j], kind, _map_ident(perm, rid), field,
                           _map_ident(perm, result)))

    def read(self, rec, field):
        self._core.gate(self.pid, "read", rec, field)
        self.steps += 1
        value = _getattr(rec, field)
        self._note("r", rec, field, self._core.ident(value))
        return value

    def write(self, rec, field, value):
        self._core.gate(self.pid, "write", rec, field)
        self.steps += 1
        _setattr(rec, field, value)
        self._note("w", rec, field, None)

    def cas(self, rec, field, old, new):
        self._core.gate(self.pid, "cas", rec, field)
        self.steps += 1
        if _getattr(rec, field) is old:
            _setattr(rec, field, new)
            ok = True
        else:
            ok = False
        self._note("c", rec, field, ok)
        return ok


class SimMemory:
    """Backend for the deterministic scheduler.

    Objects are registered into an arena and given schedule-independent
    identities ``(owner, seq)`` so that states reached along different
    interleavings can be compared structurally.
    """

    simulated = True

    def __init__(self):
        self.arena = []
        self._init_seq = 0
        self.perms = [{}]  # symmetry permutations, identity by default
        self.gate = _setup_gate  # replaced by the scheduler before stepping

    def view(self, pid):
        return _SimView(pid, self)

    def register(self, obj):
        # setup-time allocations, before any process runs
        obj.sim_id = ("init", self._init_seq)
        self._init_seq += 1
        self.arena.append(obj)
        return obj

    @staticmethod
    def ident(value):
        sid = _getattr(value, "sim_id", None)
        return value if sid is None else sid


def _setup_gate(pid, kind, rec, field):
    raise RuntimeError("simulated memory accessed before a scheduler "
                       "was attached")
