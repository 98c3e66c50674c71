"""Grace-period contract of the deferred reclaimer."""

from __future__ import annotations

from chromatree import ChromaticTree
from chromatree.reclaim import EpochReclaimer


def test_nothing_is_freed_without_quiescence():
    rec = EpochReclaimer()
    rec.register(0)
    rec.retire(object())
    assert rec.pending() == 1
    assert rec.collect() == 0
    assert rec.pending() == 1


def test_release_after_every_process_passes_a_quiescent_point():
    rec = EpochReclaimer()
    rec.register(0)
    rec.register(1)
    rec.retire(object())
    rec.quiescent(0)
    assert rec.collect() == 0  # process 1 may still hold a reference
    rec.quiescent(1)
    assert rec.collect() == 1
    assert rec.pending() == 0
    assert rec.freed_count == 1


def test_a_straggler_blocks_only_older_retirements():
    rec = EpochReclaimer()
    rec.register(0)
    rec.register(1)
    rec.retire("old")
    rec.quiescent(0)
    rec.quiescent(1)
    rec.retire("new")
    assert rec.collect() == 1  # "old" predates both announcements
    assert rec.pending() == 1  # "new" still inside its grace period


def test_unregister_lifts_the_horizon():
    rec = EpochReclaimer()
    rec.register(0)
    rec.register(1)
    rec.retire(object())
    rec.quiescent(0)
    assert rec.collect() == 0
    rec.unregister(1)
    assert rec.collect() == 1


def test_collect_without_processes_is_a_noop():
    rec = EpochReclaimer()
    rec.retire(object())
    assert rec.collect() == 0


def test_tree_updates_feed_the_retired_set():
    rec = EpochReclaimer()
    rec.register(0)
    tree = ChromaticTree(reclaimer=rec)
    ctx = tree.make_ctx(0)
    for k in range(40):
        tree.insert(ctx, k)
    for k in range(40):
        tree.delete(ctx, k)
    assert rec.pending() > 0
    rec.quiescent(0)
    assert rec.collect() == rec.freed_count > 0
    assert rec.pending() == 0
