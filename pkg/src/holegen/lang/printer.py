"""Canonical MiniJ printer.

Printing then re-parsing yields a structurally equal tree; all emitted
artifacts (.mj programs, .mjt templates) go through this module so files are
byte-deterministic.
"""

from __future__ import annotations

import math
import struct

from . import nodes as N

_PREC = {
    "||": 2,
    "&&": 3,
    "==": 4,
    "!=": 4,
    "<": 5,
    "<=": 5,
    ">": 5,
    ">=": 5,
    "<<": 6,
    ">>": 6,
    ">>>": 6,
    "+": 7,
    "-": 7,
    "*": 8,
    "/": 8,
    "%": 8,
}
_UNARY_PREC = 9
_POSTFIX_PREC = 10
_ATOM_PREC = 11

_CHAR_ESCAPES = {10: "\\n", 9: "\\t", 13: "\\r", 0: "\\0", 92: "\\\\", 39: "\\'"}


def format_double(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    if v == 0.0 and struct.pack(">d", v)[0] & 0x80:
        return "-0.0"
    return repr(v)


def format_char(code: int) -> str:
    if code in _CHAR_ESCAPES:
        return f"'{_CHAR_ESCAPES[code]}'"
    if 32 <= code <= 126:
        return f"'{chr(code)}'"
    return f"'\\u{code:04x}'"


def print_expr(e: N.Expr, prec: int = 0) -> str:
    text, my_prec = _expr(e)
    if my_prec < prec:
        return f"({text})"
    return text


def _expr(e: N.Expr) -> tuple[str, int]:
    if isinstance(e, N.IntLit):
        return str(e.value), _ATOM_PREC
    if isinstance(e, N.DoubleLit):
        return format_double(e.value), _ATOM_PREC
    if isinstance(e, N.BoolLit):
        return ("true" if e.value else "false"), _ATOM_PREC
    if isinstance(e, N.CharLit):
        return format_char(e.value), _ATOM_PREC
    if isinstance(e, N.NullLit):
        return "null", _ATOM_PREC
    if isinstance(e, N.Ident):
        return e.name, _ATOM_PREC
    if isinstance(e, N.SelfRef):
        return "self", _ATOM_PREC
    if isinstance(e, N.FieldAccess):
        return f"{print_expr(e.target, _POSTFIX_PREC)}.{e.fieldname}", _POSTFIX_PREC
    if isinstance(e, N.ArrayAccess):
        return f"{print_expr(e.array, _POSTFIX_PREC)}[{print_expr(e.index)}]", _POSTFIX_PREC
    if isinstance(e, N.ArrayLength):
        return f"length({print_expr(e.array)})", _ATOM_PREC
    if isinstance(e, N.Unary):
        inner = print_expr(e.operand, _UNARY_PREC)
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        return f"{e.op}{inner}", _UNARY_PREC
    if isinstance(e, N.Binary):
        p = _PREC[e.op]
        lhs = print_expr(e.lhs, p)
        rhs = print_expr(e.rhs, p + 1)
        return f"{lhs} {e.op} {rhs}", p
    if isinstance(e, N.Cast):
        return f"({e.to}) {print_expr(e.operand, _UNARY_PREC)}", _UNARY_PREC
    if isinstance(e, N.Call):
        args = ", ".join(print_expr(a) for a in e.args)
        if e.receiver is not None:
            return f"{print_expr(e.receiver, _POSTFIX_PREC)}.{e.name}({args})", _POSTFIX_PREC
        return f"{e.name}({args})", _ATOM_PREC
    if isinstance(e, N.New):
        args = ", ".join(print_expr(a) for a in e.args)
        return f"new {e.record}({args})", _ATOM_PREC
    if isinstance(e, N.NewArray):
        return f"new {e.elem}[{print_expr(e.length)}]", _ATOM_PREC
    if isinstance(e, N.PostIncDec):
        return f"{e.name}{e.op}", _POSTFIX_PREC
    if isinstance(e, N.Hole):
        return _hole_marker(e), _ATOM_PREC
    if isinstance(e, N.Unfilled):
        return f"unfilled({e.hole_id})", _ATOM_PREC
    if isinstance(e, N.Ticks):
        return "ticks()", _ATOM_PREC
    raise AssertionError(f"unprintable expression {e!r}")


def _hole_marker(e: N.Hole) -> str:
    return f"?H{e.hole_id}{print_spec(e.spec)}"


def print_spec(spec: N.HoleSpec) -> str:
    ops = ",".join(spec.ops)
    parts = []
    for op in spec.operands:
        if isinstance(op, N.FixedOperand):
            parts.append(f"fixed({print_expr(op.expr)})")
        else:
            parts.append(print_spec(op))
    operands = ", ".join(parts)
    text = f"{{kind={spec.kind}; type={spec.ty}; ops={{{ops}}}; operands=[{operands}]"
    if spec.source is not None:
        text += f"; src=({print_expr(spec.source)})"
    return text + "}"


def _stmt_lines(s: N.Stmt, indent: int) -> list[str]:
    pad = "    " * indent
    if isinstance(s, N.VarDecl):
        return [f"{pad}{s.ty} {s.name} = {print_expr(s.init)};"]
    if isinstance(s, N.Assign):
        return [f"{pad}{print_expr(s.target)} = {print_expr(s.value)};"]
    if isinstance(s, N.ExprStmt):
        return [f"{pad}{print_expr(s.expr)};"]
    if isinstance(s, N.Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {print_expr(s.value)};"]
    if isinstance(s, N.If):
        lines = [f"{pad}if ({print_expr(s.cond)}) {{"]
        lines += _block_body(s.then, indent + 1)
        if s.orelse is None:
            lines.append(f"{pad}}}")
        elif isinstance(s.orelse, N.If):
            nested = _stmt_lines(s.orelse, indent)
            lines.append(f"{pad}}} else {nested[0][len(pad):]}")
            lines += nested[1:]
        else:
            lines.append(f"{pad}}} else {{")
            lines += _block_body(s.orelse, indent + 1)
            lines.append(f"{pad}}}")
        return lines
    if isinstance(s, N.While):
        lines = [f"{pad}while ({print_expr(s.cond)}) {{"]
        lines += _block_body(s.body, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, N.For):
        init = _inline_simple(s.init)
        cond = print_expr(s.cond) if s.cond is not None else ""
        update = _inline_simple(s.update)
        lines = [f"{pad}for ({init}; {cond}; {update}) {{"]
        lines += _block_body(s.body, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, N.Block):
        lines = [f"{pad}{{"]
        lines += _block_body(s, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    raise AssertionError(f"unprintable statement {s!r}")


def _inline_simple(s: N.Stmt | None) -> str:
    if s is None:
        return ""
    line = _stmt_lines(s, 0)[0]
    assert line.endswith(";")
    return line[:-1]


def _block_body(b: N.Block, indent: int) -> list[str]:
    lines: list[str] = []
    for s in b.stmts:
        lines += _stmt_lines(s, indent)
    return lines


def print_program(p: N.Program) -> str:
    sections: list[str] = []
    for g in p.globals:
        sections.append(f"global {g.ty} {g.name} = {print_expr(g.init)};")
    for r in p.records:
        lines = [f"record {r.name} {{"]
        for f in r.fields:
            lines.append(f"    {f.ty} {f.name};")
        lines.append("}")
        sections.append("\n".join(lines))
    for fn in p.functions:
        params = ", ".join(f"{q.ty} {q.name}" for q in fn.params)
        head = f"fn {fn.ret} {fn.key}({params}) {{"
        lines = [head]
        lines += _block_body(fn.body, 1)
        lines.append("}")
        sections.append("\n".join(lines))
    if p.harness is not None:
        h = p.harness
        lines = ["harness {", f"    entry: {h.entry};"]
        if h.args_from is not None:
            lines.append(f"    args_from: {h.args_from};")
        else:
            lines.append(f"    args: [{', '.join(h.providers or [])}];")
        if h.iterations is not None:
            lines.append(f"    iterations: {h.iterations};")
        lines.append("}")
        sections.append("\n".join(lines))
    if not sections:
        return ""
    return "\n\n".join(sections) + "\n"
