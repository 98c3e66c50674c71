"""Non-blocking chromatic tree with LLX/SCX, a deterministic scheduler,
verifier oracles, and amortized-cost instrumentation."""

from .records import INF, KeyIsSentinel, Node
from .runtime import SequentialMemory, SimMemory, ThreadedMemory
from .tree import ChromaticTree, census, dump, parse_dump

__all__ = [
    "INF",
    "KeyIsSentinel",
    "Node",
    "SequentialMemory",
    "SimMemory",
    "ThreadedMemory",
    "ChromaticTree",
    "census",
    "dump",
    "parse_dump",
]
