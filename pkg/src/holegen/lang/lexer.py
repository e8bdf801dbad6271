"""Tokenizer for `.mj` sources and `.mjt` templates."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = {
    "global",
    "record",
    "fn",
    "harness",
    "if",
    "else",
    "while",
    "for",
    "return",
    "new",
    "true",
    "false",
    "null",
    "self",
    "int",
    "double",
    "bool",
    "char",
    "unit",
    "length",
    "unfilled",
    "ticks",
    "NaN",
    "Infinity",
    "fixed",
}

# Longest first so maximal munch works with a simple scan.
SYMBOLS = [
    ">>>",
    "<<",
    ">>",
    "<=",
    ">=",
    "==",
    "!=",
    "&&",
    "||",
    "++",
    "--",
    "?",
    "{",
    "}",
    "(",
    ")",
    "[",
    "]",
    ";",
    ",",
    ".",
    ":",
    "=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
]


@dataclass
class Token:
    kind: str  # "ident" | "kw" | "int" | "double" | "char" | "sym" | "eof"
    text: str
    value: object
    line: int
    col: int


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(src)

    def err(msg: str):
        raise ParseError(msg, line, col)

    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "/" and i + 1 < n and src[i + 1] == "/":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col

        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            is_double = False
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                is_double = True
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    is_double = True
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            if is_double:
                toks.append(Token("double", text, float(text), start_line, start_col))
            else:
                toks.append(Token("int", text, int(text), start_line, start_col))
            col += j - i
            i = j
            continue

        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(src[j]):
                j += 1
            text = src[i:j]
            kind = "kw" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, text, start_line, start_col))
            col += j - i
            i = j
            continue

        if c == "'":
            j = i + 1
            if j >= n:
                err("unterminated char literal")
            code: int
            if src[j] == "\\":
                j += 1
                if j >= n:
                    err("unterminated escape")
                esc = src[j]
                if esc == "u":
                    hexs = src[j + 1 : j + 5]
                    if len(hexs) != 4:
                        err("bad unicode escape")
                    try:
                        code = int(hexs, 16)
                    except ValueError:
                        err("bad unicode escape")
                    j += 5
                elif esc in ("n", "t", "r", "0", "\\", "'"):
                    code = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39}[esc]
                    j += 1
                else:
                    err(f"unknown escape \\{esc}")
            else:
                code = ord(src[j])
                if code > 0xFFFF:
                    err("char literal outside BMP")
                j += 1
            if j >= n or src[j] != "'":
                err("unterminated char literal")
            j += 1
            toks.append(Token("char", src[i:j], code, start_line, start_col))
            col += j - i
            i = j
            continue

        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token("sym", sym, sym, start_line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            err(f"unexpected character {c!r}")

    toks.append(Token("eof", "", None, line, col))
    return toks
