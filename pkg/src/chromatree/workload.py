"""Workload generation for benchmarks and campaigns."""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass

from .records import INF, Node

__all__ = [
    "WorkloadSpec",
    "generate",
    "prefill_keys",
    "graft_balanced",
    "graft_deep_path",
    "contended_key_campaign",
]


@dataclass
class WorkloadSpec:
    key_universe: int = 1 << 16          # keys drawn from [0, key_universe)
    mix: tuple = (40, 40, 20)            # insert/delete/find percentages
    op_count: int = 1000                 # per process
    processes: int = 1
    distribution: str = "uniform"        # uniform | zipf | adversarial-same-key
    zipf_s: float = 1.2
    seed: int = 0

    def validate(self):
        if sum(self.mix) != 100 or any(m < 0 for m in self.mix):
            raise ValueError("mix must be three percentages summing to 100")
        if not 0 < self.key_universe < INF:
            raise ValueError("key universe must exclude the sentinel")
        if self.distribution not in ("uniform", "zipf", "adversarial-same-key"):
            raise ValueError(f"unknown distribution {self.distribution!r}")


def _key_picker(spec, rng):
    if spec.distribution == "uniform":
        return lambda: rng.randrange(spec.key_universe)
    if spec.distribution == "adversarial-same-key":
        k = rng.randrange(spec.key_universe)
        return lambda: k
    # zipf via inverse transform on a truncated harmonic-like weight
    s = spec.zipf_s

    def zipf():
        # rejection-free approximation: u^( -1/(s-1) ) style tail
        u = rng.random()
        rank = int((u ** (-1.0 / max(s - 1.0, 0.1)) - 1.0))
        return rank % spec.key_universe

    return zipf


def generate(spec):
    """Per-process op lists [(kind, key), ...], deterministic in seed."""
    spec.validate()
    ins, dele, _find = spec.mix
    out = []
    for pid in range(spec.processes):
        rng = random.Random((spec.seed << 8) ^ pid)
        pick = _key_picker(spec, rng)
        ops = []
        for _ in range(spec.op_count):
            r = rng.randrange(100)
            if r < ins:
                kind = "insert"
            elif r < ins + dele:
                kind = "delete"
            else:
                kind = "find"
            ops.append((kind, pick()))
        out.append(ops)
    return out


def prefill_keys(n, universe=None, seed=0):
    """n distinct keys for building an initial tree."""
    universe = universe if universe is not None else max(2 * n, 1024)
    if n > universe:
        raise ValueError("universe too small")
    rng = random.Random(seed)
    return rng.sample(range(universe), n)


def graft_balanced(tree, keys):
    """Attach a perfect weight-1 tree holding ``keys`` below the entry node.

    Needs a sorted sequence of distinct keys whose length is a power of
    two; the resulting shape satisfies every balance condition, so large
    benchmark trees can be prefilled without replaying the inserts.
    """
    n = len(keys)
    if n == 0 or n & (n - 1):
        raise ValueError("need a power-of-two number of keys")
    reg = tree.memory.register
    dummy = tree.dummy

    def build(lo, hi):
        if hi - lo == 1:
            return reg(Node(keys[lo], 1, None, None, dummy))
        mid = (lo + hi) // 2
        return reg(Node(keys[mid], 1, build(lo, mid), build(mid, hi),
                        dummy))

    tree.entry.left = build(0, n)
    return n


def graft_deep_path(tree, chain, levels=18):
    """Attach a worst-case initial tree below the entry node.

    The search path for key 1 runs through `chain` weight-0 internal nodes
    (their pending red-red violations sit inert off every other search
    path) and ends in a weight-1 tail, so the smallest leaf lies at depth
    chain+levels with a non-red parent.  A perfect weight-1 subtree on the
    right keeps the key count at 2**(levels-2)+chain+levels or so.  Every
    root-to-leaf path carries the same total weight, and leaves keep weight
    at least one, so the shape is a reachable tree state.

    Returns (key_count, depth_of_target_leaf); the hot key to use is 1,
    since stored keys start at 2.
    """
    if chain < 0 or levels < 2:
        raise ValueError("need chain >= 0 and levels >= 2")
    reg = tree.memory.register
    dummy = tree.dummy
    next_key = [2]

    def leaf(weight=1):
        node = reg(Node(next_key[0], weight, None, None, dummy))
        next_key[0] += 2
        return node

    def min_key(node):
        while node.left is not None:
            node = node.left
        return node.key

    def perfect(black_height):
        if black_height == 1:
            return leaf()
        left = perfect(black_height - 1)
        right = perfect(black_height - 1)
        return reg(Node(min_key(right), 1, left, right, dummy))

    node = leaf()                       # target of the hot key
    for _ in range(levels - 1):         # weight-1 tail above the target
        sib = leaf()
        node = reg(Node(sib.key, 1, node, sib, dummy))
    for _ in range(chain):              # red spine; hung leaves restore
        sib = leaf(levels)              # the weighted level off-path
        node = reg(Node(sib.key, 0, node, sib, dummy))
    right = perfect(levels - 1)
    root = reg(Node(min_key(right), 1, node, right, dummy))
    tree.entry.left = root

    depth, x = 0, root
    while x.left is not None:
        x, depth = x.left, depth + 1
    return (next_key[0] - 2) // 2, depth


class _HotKeyChoreography:
    """Blocks every rival thread right before the first freeze CAS of its
    update attempt, lets the leader finish an insert/delete pair, then
    releases the rivals into a doomed CAS.  One failed attempt per rival
    per round, exactly the execution that motivates backtracking."""

    def __init__(self, rival_pids):
        self._cv = threading.Condition()
        self._rivals = frozenset(rival_pids)
        self._round = 0
        self._poised = set()
        self._free = False

    def gate(self, pid, kind, rec, field):
        if kind != "cas" or field != "info" or pid not in self._rivals:
            return
        with self._cv:
            if self._free:
                return
            self._poised.add(pid)
            seen = self._round
            self._cv.notify_all()
            while self._round == seen and not self._free:
                self._cv.wait()

    def await_rivals(self):
        with self._cv:
            while len(self._poised) < len(self._rivals) and not self._free:
                self._cv.wait()

    def release_round(self):
        with self._cv:
            self._poised.clear()
            self._round += 1
            self._cv.notify_all()

    def finish(self):
        with self._cv:
            self._free = True
            self._cv.notify_all()


def contended_key_campaign(legacy_restart, rounds=40, chain=500,
                           threads=8, levels=18):
    """Hot-key benchmark: one leader repeatedly inserts and deletes the
    same key at the bottom of a worst-case path while the remaining
    threads sit inside a single Insert of that key, each attempt released
    and failed once per leader pair.  Returns a summary dict; the
    interesting number is mean shared-memory steps per completed op.
    """
    from .metrics import MetricsHub, Recorder
    from .runtime import ThreadedMemory
    from .tree import ChromaticTree

    if threads < 2:
        raise ValueError("need a leader and at least one rival")
    choreo = _HotKeyChoreography(range(1, threads))
    memory = ThreadedMemory(gate=choreo.gate)
    tree = ChromaticTree(memory, legacy_restart=legacy_restart)
    key_count, depth = graft_deep_path(tree, chain, levels)
    hot = 1

    hub = MetricsHub()
    recorders = [Recorder(hub) for _ in range(threads)]

    def rival(pid):
        ctx = tree.make_ctx(pid, recorders[pid])
        tree.insert(ctx, hot)

    workers = [threading.Thread(target=rival, args=(pid,))
               for pid in range(1, threads)]
    for w in workers:
        w.start()

    leader = tree.make_ctx(0, recorders[0])
    try:
        for _ in range(rounds):
            choreo.await_rivals()
            tree.insert(leader, hot)
            tree.delete(leader, hot)
            choreo.release_round()
    finally:
        choreo.finish()
        for w in workers:
            w.join()

    rows = [row for rec in recorders for row in rec.rows]
    total = sum(row.steps for row in rows)
    return {
        "legacy_restart": legacy_restart,
        "rounds": rounds,
        "threads": threads,
        "keys": key_count,
        "depth": depth,
        "ops": len(rows),
        "total_steps": total,
        "mean_steps_per_op": total / len(rows),
    }
