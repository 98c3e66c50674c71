"""Deferred reclamation with an epoch/grace-period contract.

Nodes replaced by a successful SCX are finalized and can be retired here.
A retired node is released only after every registered process has passed
a quiescent point later than the retirement.  The interpreter's collector
does the actual freeing; this facility only decides *when* a node may drop
out of the retired set, and its contract is what the tests check.

Under the deterministic scheduler reclamation stays disabled so traces can
still inspect replaced nodes.
"""

from __future__ import annotations

import threading

__all__ = ["EpochReclaimer"]


class EpochReclaimer:

    def __init__(self):
        self._lock = threading.Lock()
        self.epoch = 0
        self._announced = {}
        self._retired = []  # (retire_epoch, node)
        self.freed_count = 0

    def register(self, pid):
        with self._lock:
            self._announced[pid] = self.epoch

    def unregister(self, pid):
        with self._lock:
            self._announced.pop(pid, None)

    def quiescent(self, pid):
        """Declare that pid holds no references from before this call."""
        with self._lock:
            self.epoch += 1
            self._announced[pid] = self.epoch

    def retire(self, node):
        with self._lock:
            self._retired.append((self.epoch, node))

    def pending(self):
        with self._lock:
            return len(self._retired)

    def collect(self):
        """Release every node whose grace period has elapsed; returns how
        many were released."""
        with self._lock:
            if not self._announced:
                return 0
            horizon = min(self._announced.values())
            keep = [(e, n) for e, n in self._retired if e >= horizon]
            freed = len(self._retired) - len(keep)
            self._retired = keep
            self.freed_count += freed
            return freed
