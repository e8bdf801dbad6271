"""Runtime values and primitive operation semantics.

Primitives live as raw Python scalars (int kept in signed 32-bit range,
float, bool, char as a code unit int); arrays and records are mutable heap
objects with reference identity. All int arithmetic wraps modulo 2^32;
division and remainder by zero trap; doubles follow IEEE-754 with Java-style
remainder.
"""

from __future__ import annotations

import math

from ..errors import DIV_BY_ZERO, INDEX_OUT_OF_BOUNDS, Trap
from .nodes import INT_MAX, INT_MIN, MAX_ARRAY_LEN, RecordDecl


class Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"


UNIT = Unit()

_ELEM_DEFAULT = {"int": 0, "double": 0.0, "char": 0}


class ArrayV:
    __slots__ = ("elem", "items")

    def __init__(self, elem: str, items: list):
        self.elem = elem
        self.items = items

    def __repr__(self):
        return f"{self.elem}[{len(self.items)}]"


class RecordV:
    __slots__ = ("decl", "values")

    def __init__(self, decl: RecordDecl, values: dict):
        self.decl = decl
        self.values = values

    def __repr__(self):
        return f"{self.decl.name}@{id(self):x}"


def new_array(elem: str, length: int, budget=None) -> ArrayV:
    if length < 0 or length > MAX_ARRAY_LEN:
        # Oversized allocation traps like an index error so harnesses can
        # hash it per-iteration instead of aborting the run.
        raise Trap(INDEX_OUT_OF_BOUNDS)
    if budget is not None:
        budget.alloc(length + 1)
    return ArrayV(elem, [_ELEM_DEFAULT[elem]] * length)


def elem_default(elem: str):
    return _ELEM_DEFAULT[elem]


def wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - 0x100000000 if v & 0x80000000 else v


def int_add(a: int, b: int) -> int:
    return wrap32(a + b)


def int_sub(a: int, b: int) -> int:
    return wrap32(a - b)


def int_mul(a: int, b: int) -> int:
    return wrap32(a * b)


def int_div(a: int, b: int) -> int:
    if b == 0:
        raise Trap(DIV_BY_ZERO)
    # Truncate toward zero; INT_MIN / -1 wraps.
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap32(q)


def int_rem(a: int, b: int) -> int:
    if b == 0:
        raise Trap(DIV_BY_ZERO)
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def int_shl(a: int, b: int) -> int:
    return wrap32(a << (b & 31))


def int_shr(a: int, b: int) -> int:
    return a >> (b & 31)


def int_ushr(a: int, b: int) -> int:
    return wrap32((a & 0xFFFFFFFF) >> (b & 31))


def dbl_rem(a: float, b: float) -> float:
    # Java remainder: NaN for zero/NaN divisor or infinite dividend;
    # dividend unchanged for infinite divisor; otherwise C fmod.
    if math.isnan(a) or math.isnan(b) or b == 0.0 or math.isinf(a):
        return float("nan")
    if math.isinf(b):
        return a
    return math.fmod(a, b)


def d2i(v: float) -> int:
    if math.isnan(v):
        return 0
    if v >= INT_MAX:
        return INT_MAX
    if v <= INT_MIN:
        return INT_MIN
    return int(v)


def i2c(v: int) -> int:
    return v & 0xFFFF


def default_value(ty) -> object:
    """Zero value of a static type; used when a trapped initializer is skipped."""
    tag = ty.tag
    if tag == "int":
        return 0
    if tag == "double":
        return 0.0
    if tag == "bool":
        return False
    if tag == "char":
        return 0
    if tag == "unit":
        return UNIT
    return None
