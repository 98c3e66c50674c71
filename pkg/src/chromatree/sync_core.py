"""LLX/SCX multiword synchronization primitives.

A ``DataRecord`` has a fixed tuple of mutable cells, an ``info`` reference
to the descriptor of the last operation that froze it, and a monotone
``marked`` flag.  ``llx`` returns a snapshot of the mutable cells (or Fail
or Finalized), and ``scx`` atomically changes one cell of one record while
finalizing a subset of the records it read, helping any conflicting
operation first.

All shared accesses go through a :class:`chromatree.runtime.MemoryView`,
so the same code runs sequentially, under threads, or under the
deterministic scheduler.
"""

from __future__ import annotations

__all__ = [
    "DataRecord",
    "ScxRecord",
    "Context",
    "committed_dummy",
    "FAIL",
    "FINALIZED",
    "IN_PROGRESS",
    "COMMITTED",
    "ABORTED",
    "llx",
    "scx",
    "help_scx",
]

IN_PROGRESS = 0
COMMITTED = 1
ABORTED = 2


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


FAIL = _Sentinel("FAIL")
FINALIZED = _Sentinel("FINALIZED")


class ScxRecord:
    """Descriptor for one SCX: the records to freeze (V, in order), the
    subset to finalize (R), the single cell being changed, and the info
    values linked by the caller's LLXs."""

    __slots__ = ("V", "R", "fld_rec", "fld_name", "new_value", "old_value",
                 "state", "all_frozen", "info_fields", "tag", "sim_id")

    def __init__(self, V, R, fld_rec, fld_name, new_value, old_value,
                 info_fields, tag=None):
        self.V = V
        self.R = R
        self.fld_rec = fld_rec
        self.fld_name = fld_name
        self.new_value = new_value
        self.old_value = old_value
        self.state = IN_PROGRESS
        self.all_frozen = False
        self.info_fields = info_fields
        self.tag = tag
        self.sim_id = None


def committed_dummy():
    """A pre-committed descriptor used as the initial info of fresh records,
    so they read as unfrozen."""
    rec = ScxRecord((), (), None, None, None, None, (), tag="dummy")
    rec.state = COMMITTED
    return rec


class DataRecord:
    """Base class for records managed by LLX/SCX.

    Subclasses declare ``MUTABLE_FIELDS`` (a tuple of attribute names) and
    must initialize each of them plus the immutable payload."""

    MUTABLE_FIELDS = ()

    __slots__ = ("info", "marked", "sim_id")

    def __init__(self, info):
        self.info = info
        self.marked = False
        self.sim_id = None


class Context:
    """Per-process state: a memory view and the table of linked LLXs that
    the next SCX will consume."""

    __slots__ = ("pid", "mem", "llx_table")

    def __init__(self, pid, mem):
        self.pid = pid
        self.mem = mem
        self.llx_table = {}


def llx(ctx, r):
    """Load-link-extended.  Returns the tuple of mutable-cell values, or
    FAIL, or FINALIZED.  On success the link is remembered in ``ctx`` for a
    later :func:`scx` naming ``r``."""
    mem = ctx.mem
    marked1 = mem.read(r, "marked")
    rinfo = mem.read(r, "info")
    state = mem.read(rinfo, "state")
    marked2 = mem.read(r, "marked")
    if state == ABORTED or (state == COMMITTED and not marked2):
        fields = tuple(mem.read(r, f) for f in r.MUTABLE_FIELDS)
        if mem.read(r, "info") is rinfo:
            ctx.llx_table[r] = (rinfo, fields)
            return fields
    rstate = mem.read(rinfo, "state")
    if (rstate == COMMITTED
            or (rstate == IN_PROGRESS and help_scx(mem, rinfo))) and marked1:
        return FINALIZED
    cur = mem.read(r, "info")
    if mem.read(cur, "state") == IN_PROGRESS:
        help_scx(mem, cur)
    return FAIL


def scx(ctx, V, R, fld_rec, fld_name, new_value, tag=None):
    """Store-conditional-extended.  Requires a successful prior llx in this
    context for every record in V.  Freezes V in order, finalizes R, swings
    ``fld_rec.fld_name`` from its linked value to ``new_value``.  Returns
    True on commit.  The link table is consumed either way."""
    table = ctx.llx_table
    info_fields = tuple(table[r][0] for r in V)
    entry = table[fld_rec]
    old_value = entry[1][fld_rec.MUTABLE_FIELDS.index(fld_name)]
    desc = ScxRecord(tuple(V), tuple(R), fld_rec, fld_name, new_value,
                     old_value, info_fields, tag)
    ctx.mem.register(desc)
    table.clear()
    return help_scx(ctx.mem, desc)


def help_scx(mem, desc):
    """Complete ``desc`` on behalf of any process.  Idempotent."""
    # freezing CAS on each record in V, in order
    info_fields = desc.info_fields
    for i, r in enumerate(desc.V):
        if not mem.cas(r, "info", info_fields[i], desc):
            if mem.read(r, "info") is not desc:
                # frozen-check step: another operation owns r
                if mem.read(desc, "all_frozen"):
                    return True
                mem.write(desc, "state", ABORTED)
                return False
    # frozen step
    mem.write(desc, "all_frozen", True)
    # mark steps
    for r in desc.R:
        mem.write(r, "marked", True)
    # update CAS
    mem.cas(desc.fld_rec, desc.fld_name, desc.old_value, desc.new_value)
    # commit step
    mem.write(desc, "state", COMMITTED)
    return True
