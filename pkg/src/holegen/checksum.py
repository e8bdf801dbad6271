"""Order-sensitive 64-bit checksum over runtime values.

The accumulator is FNV-1a 64 folded over a canonical, backend-independent
byte encoding. Every update is tag-prefixed and variable-length parts are
length-prefixed, so distinct update streams cannot collide by concatenation.

Encoding per update:
    int     0x01 + 4 bytes big-endian two's complement
    double  0x02 + 8 bytes big-endian IEEE bits; every NaN canonicalizes to
            0x7ff8000000000000; -0.0 stays distinct from 0.0
    bool    0x03 + 0x01/0x00
    char    0x04 + 2 bytes big-endian
    array   0x05 + element code (1=int, 2=double, 4=char) + u32 length +
            raw element bytes (4/8/2 bytes each, doubles canonicalized)
    record  0x06 + u32 name length + name utf-8 + u32 field count + each
            field value encoded recursively in declaration order; a record
            object already seen in the same update encodes as
            0x0a + u32 first-visit ordinal instead of recursing
    null    0x07
    unit    0x08
    trap    0x09 + u32 length + trap kind name utf-8
"""

from __future__ import annotations

import math
import struct

from .lang.values import UNIT, ArrayV, RecordV

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF

_TAG_INT = b"\x01"
_TAG_DOUBLE = b"\x02"
_TAG_BOOL = b"\x03"
_TAG_CHAR = b"\x04"
_TAG_ARRAY = b"\x05"
_TAG_RECORD = b"\x06"
_TAG_NULL = b"\x07"
_TAG_UNIT = b"\x08"
_TAG_TRAP = b"\x09"
_TAG_BACKREF = b"\x0a"

_ELEM_CODE = {"int": b"\x01", "double": b"\x02", "char": b"\x04"}
_CANON_NAN = struct.pack(">Q", 0x7FF8000000000000)


def _double_bits(v: float) -> bytes:
    if math.isnan(v):
        return _CANON_NAN
    return struct.pack(">d", v)


def encode_value(ty_tag: str, value: object) -> bytes:
    """Canonical bytes for one update; `ty_tag` is the static type tag."""
    if ty_tag == "int":
        return _TAG_INT + struct.pack(">i", value)
    if ty_tag == "double":
        return _TAG_DOUBLE + _double_bits(value)
    if ty_tag == "bool":
        return _TAG_BOOL + (b"\x01" if value else b"\x00")
    if ty_tag == "char":
        return _TAG_CHAR + struct.pack(">H", value)
    if ty_tag == "unit":
        return _TAG_UNIT
    if value is None:
        return _TAG_NULL
    if isinstance(value, ArrayV):
        return _encode_array(value)
    if isinstance(value, RecordV):
        return _encode_record(value, {})
    raise AssertionError(f"unencodable value {value!r} of type {ty_tag}")


def _encode_array(arr: ArrayV) -> bytes:
    out = [_TAG_ARRAY, _ELEM_CODE[arr.elem], struct.pack(">I", len(arr.items))]
    if arr.elem == "int":
        out += [struct.pack(">i", v) for v in arr.items]
    elif arr.elem == "double":
        out += [_double_bits(v) for v in arr.items]
    else:
        out += [struct.pack(">H", v) for v in arr.items]
    return b"".join(out)


def _encode_record(rec: RecordV, seen: dict[int, int]) -> bytes:
    key = id(rec)
    if key in seen:
        return _TAG_BACKREF + struct.pack(">I", seen[key])
    seen[key] = len(seen)
    name = rec.decl.name.encode("utf-8")
    out = [_TAG_RECORD, struct.pack(">I", len(name)), name, struct.pack(">I", len(rec.decl.fields))]
    for f in rec.decl.fields:
        v = rec.values[f.name]
        if isinstance(v, RecordV):
            out.append(_encode_record(v, seen))
        elif v is None:
            out.append(_TAG_NULL)
        elif isinstance(v, ArrayV):
            out.append(_encode_array(v))
        else:
            out.append(encode_value(f.ty.tag, v))
    return b"".join(out)


def encode_trap(kind: str) -> bytes:
    data = kind.encode("utf-8")
    return _TAG_TRAP + struct.pack(">I", len(data)) + data


class Checksum:
    """Running FNV-1a 64 accumulator over canonical update encodings."""

    __slots__ = ("value",)

    def __init__(self):
        self.value = FNV_OFFSET

    def _fold(self, data: bytes) -> None:
        h = self.value
        for b in data:
            h = ((h ^ b) * FNV_PRIME) & _MASK
        self.value = h

    def update(self, ty_tag: str, value: object) -> None:
        self._fold(encode_value(ty_tag, value))

    def update_trap(self, kind: str) -> None:
        self._fold(encode_trap(kind))

    def hex(self) -> str:
        return f"{self.value:016x}"
