"""Shared error and trap types.

Runtime behavior of MiniJ code is total: evaluation either produces a value
or raises exactly one Trap (division/remainder by zero, out-of-bounds array
access, null dereference, or an unfilled hole), or exhausts a resource limit.
"""

from __future__ import annotations

# Trap kinds. The kind *name* is what checksum harnesses hash, so these
# strings are part of the wire format and must stay stable.
DIV_BY_ZERO = "DivByZero"
INDEX_OUT_OF_BOUNDS = "IndexOutOfBounds"
NULL_DEREF = "NullDeref"
UNFILLED_HOLE = "UnfilledHole"

TRAP_KINDS = (DIV_BY_ZERO, INDEX_OUT_OF_BOUNDS, NULL_DEREF, UNFILLED_HOLE)

# Resource limits that abort a run.
LIMIT_STEPS = "steps"
LIMIT_HEAP = "heap"
LIMIT_WALL = "wall"
LIMIT_DEPTH = "depth"


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


class TypeCheckError(Exception):
    """Static typing violation; carries the offending source span."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


class Trap(Exception):
    """A MiniJ runtime trap. `hole_id` set only for UnfilledHole."""

    def __init__(self, kind: str, hole_id: int | None = None):
        assert kind in TRAP_KINDS
        super().__init__(kind if hole_id is None else f"{kind}({hole_id})")
        self.kind = kind
        self.hole_id = hole_id


class LimitExceeded(Exception):
    """A resource limit fired (step budget, heap cells, wall clock, depth)."""

    def __init__(self, which: str):
        super().__init__(which)
        self.which = which


class ExtractError(Exception):
    """Template extraction gave up on an entry (e.g. unconstructible parameter)."""


class InternalCompileError(Exception):
    """Bytecode compilation or verification failed; counts as a crash outcome."""
