"""Tree node records and shared result codes."""

from __future__ import annotations

from .sync_core import DataRecord

__all__ = [
    "INF",
    "KeyIsSentinel",
    "Node",
    "SUCCESS",
    "FAILED_LLX",
    "FAILED_SCX",
    "FAILED_NIL",
    "FAILED_MATCH",
]

# Largest 64-bit unsigned value, reserved as the infinity sentinel key.
INF = 2**64 - 1


class KeyIsSentinel(ValueError):
    """Raised when a caller passes the reserved maximum key."""


class Node(DataRecord):
    """Leaf-oriented tree node.  ``key`` and ``weight`` are fixed at
    creation; only the child pointers ever change, and only through SCX.
    A node is a leaf iff it was created with no children."""

    MUTABLE_FIELDS = ("left", "right")

    __slots__ = ("key", "weight", "left", "right")

    def __init__(self, key, weight, left, right, info):
        super().__init__(info)
        self.key = key
        self.weight = weight
        self.left = left
        self.right = right

    def is_leaf(self):
        # creation-immutable: children are either both None or both set
        return self.left is None

    def __repr__(self):
        k = "INF" if self.key == INF else self.key
        shape = "leaf" if self.left is None else "node"
        return f"<{shape} {k} w={self.weight}>"


# attempt outcomes for the conditional update helpers
SUCCESS = "success"
FAILED_LLX = "failed_llx"
FAILED_SCX = "failed_scx"
FAILED_NIL = "failed_nil"
FAILED_MATCH = "failed_match"
