"""Recursive-descent parser for MiniJ sources and templates.

Produces an unresolved AST; `typecheck.check_program` resolves names and
types. Hole markers (`?H<k>{...}`) parse into Hole nodes plus a spec registry
on the returned Program.
"""

from __future__ import annotations

from ..errors import ParseError
from . import nodes as N
from .lexer import Token, tokenize

_PRIM_TYPES = ("int", "double", "bool", "char")


class Parser:
    def __init__(self, src: str, name: str):
        self.toks = tokenize(src)
        self.i = 0
        self.name = name
        self.holes: dict[int, N.HoleSpec] = {}

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_sym(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == text

    def at_kw(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text == text

    def eat_sym(self, text: str) -> Token:
        t = self.peek()
        if not (t.kind == "sym" and t.text == text):
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def eat_kw(self, text: str) -> Token:
        t = self.peek()
        if not (t.kind == "kw" and t.text == text):
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def eat_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return self.next()

    def _pos(self, t: Token):
        return (t.line, t.col)

    # -- declarations -------------------------------------------------------

    def parse_program(self) -> N.Program:
        globals_: list[N.GlobalDecl] = []
        records: list[N.RecordDecl] = []
        functions: list[N.FunctionDecl] = []
        harness: N.HarnessDecl | None = None
        while self.peek().kind != "eof":
            t = self.peek()
            if self.at_kw("global"):
                globals_.append(self.parse_global())
            elif self.at_kw("record"):
                records.append(self.parse_record())
            elif self.at_kw("fn"):
                functions.append(self.parse_function())
            elif self.at_kw("harness"):
                if harness is not None:
                    raise ParseError("duplicate harness declaration", t.line, t.col)
                harness = self.parse_harness()
            else:
                raise ParseError(f"expected declaration, found {t.text!r}", t.line, t.col)
        prog = N.Program(self.name, globals_, records, functions, harness)
        prog.holes = self.holes
        return prog

    def parse_global(self) -> N.GlobalDecl:
        t = self.eat_kw("global")
        ty = self.parse_type()
        name = self.eat_ident().text
        self.eat_sym("=")
        init = self.parse_expr()
        self.eat_sym(";")
        return N.GlobalDecl(ty, name, init, pos=self._pos(t))

    def parse_record(self) -> N.RecordDecl:
        t = self.eat_kw("record")
        name = self.eat_ident().text
        self.eat_sym("{")
        fields: list[N.Param] = []
        while not self.at_sym("}"):
            fty = self.parse_type()
            fname = self.eat_ident().text
            self.eat_sym(";")
            fields.append(N.Param(fty, fname))
        self.eat_sym("}")
        return N.RecordDecl(name, fields, pos=self._pos(t))

    def parse_function(self) -> N.FunctionDecl:
        t = self.eat_kw("fn")
        ret = self.parse_type()
        first = self.eat_ident().text
        receiver = None
        name = first
        if self.at_sym("."):
            self.next()
            receiver = first
            name = self.eat_ident().text
        self.eat_sym("(")
        params: list[N.Param] = []
        while not self.at_sym(")"):
            if params:
                self.eat_sym(",")
            pty = self.parse_type()
            pname = self.eat_ident().text
            params.append(N.Param(pty, pname))
        self.eat_sym(")")
        body = self.parse_block()
        return N.FunctionDecl(name, receiver, params, ret, body, pos=self._pos(t))

    def parse_harness(self) -> N.HarnessDecl:
        t = self.eat_kw("harness")
        self.eat_sym("{")
        entry = None
        providers = None
        args_from = None
        iterations = None
        while not self.at_sym("}"):
            key = self.eat_ident().text
            self.eat_sym(":")
            if key == "entry":
                first = self.eat_ident().text
                if self.at_sym("."):
                    self.next()
                    first = f"{first}.{self.eat_ident().text}"
                entry = first
            elif key == "iterations":
                tok = self.peek()
                if tok.kind != "int":
                    raise ParseError("iterations expects an integer", tok.line, tok.col)
                iterations = int(self.next().value)
            elif key == "args":
                self.eat_sym("[")
                providers = []
                while not self.at_sym("]"):
                    if providers:
                        self.eat_sym(",")
                    providers.append(self.eat_ident().text)
                self.eat_sym("]")
            elif key == "args_from":
                args_from = self.eat_ident().text
            else:
                raise ParseError(f"unknown harness key {key!r}", t.line, t.col)
            self.eat_sym(";")
        self.eat_sym("}")
        if entry is None:
            raise ParseError("harness needs an entry", t.line, t.col)
        if providers is None and args_from is None:
            providers = []
        return N.HarnessDecl(entry, providers, args_from, iterations, pos=self._pos(t))

    # -- types --------------------------------------------------------------

    def parse_type(self) -> N.Type:
        t = self.peek()
        if t.kind == "kw" and t.text in _PRIM_TYPES:
            self.next()
            if self.at_sym("[") and self.peek(1).kind == "sym" and self.peek(1).text == "]":
                self.next()
                self.next()
                if t.text == "bool":
                    raise ParseError("arrays hold int, double or char elements", t.line, t.col)
                return N.array_of(t.text)
            return N.PRIMITIVES[t.text]
        if t.kind == "kw" and t.text == "unit":
            self.next()
            return N.UNIT
        if t.kind == "ident":
            self.next()
            return N.record_ref(t.text)
        raise ParseError(f"expected a type, found {t.text!r}", t.line, t.col)

    # -- statements ---------------------------------------------------------

    def parse_block(self) -> N.Block:
        t = self.eat_sym("{")
        stmts: list[N.Stmt] = []
        while not self.at_sym("}"):
            stmts.append(self.parse_stmt())
        self.eat_sym("}")
        return N.Block(stmts, pos=self._pos(t))

    def _starts_type(self) -> bool:
        t = self.peek()
        if t.kind == "kw" and t.text in (*_PRIM_TYPES, "unit"):
            return True
        if t.kind == "ident":
            # `Foo x = ...` declares; anything else is an expression.
            return self.peek(1).kind == "ident"
        return False

    def parse_stmt(self) -> N.Stmt:
        t = self.peek()
        if self.at_kw("if"):
            return self.parse_if()
        if self.at_kw("while"):
            self.next()
            self.eat_sym("(")
            cond = self.parse_expr()
            self.eat_sym(")")
            body = self.parse_block()
            return N.While(cond, body, pos=self._pos(t))
        if self.at_kw("for"):
            return self.parse_for()
        if self.at_kw("return"):
            self.next()
            value = None if self.at_sym(";") else self.parse_expr()
            self.eat_sym(";")
            return N.Return(value, pos=self._pos(t))
        if self.at_sym("{"):
            return self.parse_block()
        s = self.parse_simple_stmt()
        self.eat_sym(";")
        return s

    def parse_if(self) -> N.If:
        t = self.eat_kw("if")
        self.eat_sym("(")
        cond = self.parse_expr()
        self.eat_sym(")")
        then = self.parse_block()
        orelse = None
        if self.at_kw("else"):
            self.next()
            orelse = self.parse_if() if self.at_kw("if") else self.parse_block()
        return N.If(cond, then, orelse, pos=self._pos(t))

    def parse_for(self) -> N.For:
        t = self.eat_kw("for")
        self.eat_sym("(")
        init = None if self.at_sym(";") else self.parse_simple_stmt()
        self.eat_sym(";")
        cond = None if self.at_sym(";") else self.parse_expr()
        self.eat_sym(";")
        update = None if self.at_sym(")") else self.parse_simple_stmt()
        self.eat_sym(")")
        body = self.parse_block()
        return N.For(init, cond, update, body, pos=self._pos(t))

    def parse_simple_stmt(self) -> N.Stmt:
        """A declaration, assignment, or expression statement (no semicolon)."""
        t = self.peek()
        if self._starts_type():
            ty = self.parse_type()
            name = self.eat_ident().text
            self.eat_sym("=")
            init = self.parse_expr()
            return N.VarDecl(ty, name, init, pos=self._pos(t))
        expr = self.parse_expr()
        if self.at_sym("="):
            if not isinstance(expr, (N.Ident, N.FieldAccess, N.ArrayAccess)):
                raise ParseError("invalid assignment target", t.line, t.col)
            self.next()
            value = self.parse_expr()
            return N.Assign(expr, value, pos=self._pos(t))
        if not isinstance(expr, (N.Call, N.PostIncDec)):
            raise ParseError("expression statement must be a call or ++/--", t.line, t.col)
        return N.ExprStmt(expr, pos=self._pos(t))

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> N.Expr:
        return self.parse_or()

    def parse_or(self) -> N.Expr:
        e = self.parse_and()
        while self.at_sym("||"):
            t = self.next()
            e = N.Binary("||", e, self.parse_and(), pos=self._pos(t))
        return e

    def parse_and(self) -> N.Expr:
        e = self.parse_eq()
        while self.at_sym("&&"):
            t = self.next()
            e = N.Binary("&&", e, self.parse_eq(), pos=self._pos(t))
        return e

    def parse_eq(self) -> N.Expr:
        e = self.parse_rel()
        while self.at_sym("==") or self.at_sym("!="):
            t = self.next()
            e = N.Binary(t.text, e, self.parse_rel(), pos=self._pos(t))
        return e

    def parse_rel(self) -> N.Expr:
        e = self.parse_shift()
        if self.at_sym("<") or self.at_sym("<=") or self.at_sym(">") or self.at_sym(">="):
            t = self.next()
            e = N.Binary(t.text, e, self.parse_shift(), pos=self._pos(t))
        return e

    def parse_shift(self) -> N.Expr:
        e = self.parse_add()
        while self.at_sym("<<") or self.at_sym(">>") or self.at_sym(">>>"):
            t = self.next()
            e = N.Binary(t.text, e, self.parse_add(), pos=self._pos(t))
        return e

    def parse_add(self) -> N.Expr:
        e = self.parse_mul()
        while self.at_sym("+") or self.at_sym("-"):
            t = self.next()
            e = N.Binary(t.text, e, self.parse_mul(), pos=self._pos(t))
        return e

    def parse_mul(self) -> N.Expr:
        e = self.parse_unary()
        while self.at_sym("*") or self.at_sym("/") or self.at_sym("%"):
            t = self.next()
            e = N.Binary(t.text, e, self.parse_unary(), pos=self._pos(t))
        return e

    def parse_unary(self) -> N.Expr:
        t = self.peek()
        if self.at_sym("-"):
            self.next()
            operand = self.parse_unary()
            # Fold minus into literals so INT_MIN and -0.0 are expressible.
            if isinstance(operand, N.IntLit) and operand.value > 0:
                v = -operand.value
                if v < N.INT_MIN:
                    raise ParseError("int literal out of range", t.line, t.col)
                return N.IntLit(v, pos=self._pos(t))
            if isinstance(operand, N.DoubleLit):
                return N.DoubleLit(-operand.value, pos=self._pos(t))
            return N.Unary("-", operand, pos=self._pos(t))
        if self.at_sym("!"):
            self.next()
            return N.Unary("!", self.parse_unary(), pos=self._pos(t))
        if (
            self.at_sym("(")
            and self.peek(1).kind == "kw"
            and self.peek(1).text in ("int", "double", "char")
            and self.peek(2).kind == "sym"
            and self.peek(2).text == ")"
        ):
            self.next()
            to = N.PRIMITIVES[self.next().text]
            self.next()
            return N.Cast(to, self.parse_unary(), pos=self._pos(t))
        return self.parse_postfix()

    def parse_postfix(self) -> N.Expr:
        e = self.parse_primary()
        while True:
            t = self.peek()
            if self.at_sym("."):
                self.next()
                name = self.eat_ident().text
                if self.at_sym("("):
                    args = self.parse_args()
                    e = N.Call(name, args, receiver=e, pos=self._pos(t))
                else:
                    e = N.FieldAccess(e, name, pos=self._pos(t))
            elif self.at_sym("["):
                self.next()
                idx = self.parse_expr()
                self.eat_sym("]")
                e = N.ArrayAccess(e, idx, pos=self._pos(t))
            elif self.at_sym("++") or self.at_sym("--"):
                if not isinstance(e, N.Ident):
                    raise ParseError("++/-- applies to a variable", t.line, t.col)
                self.next()
                e = N.PostIncDec(t.text, e.name, pos=self._pos(t))
            else:
                return e

    def parse_args(self) -> list[N.Expr]:
        self.eat_sym("(")
        args: list[N.Expr] = []
        while not self.at_sym(")"):
            if args:
                self.eat_sym(",")
            args.append(self.parse_expr())
        self.eat_sym(")")
        return args

    def parse_primary(self) -> N.Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            if t.value > N.INT_MAX:
                raise ParseError("int literal out of range", t.line, t.col)
            return N.IntLit(int(t.value), pos=self._pos(t))
        if t.kind == "double":
            self.next()
            return N.DoubleLit(float(t.value), pos=self._pos(t))
        if t.kind == "char":
            self.next()
            return N.CharLit(int(t.value), pos=self._pos(t))
        if self.at_kw("true") or self.at_kw("false"):
            self.next()
            return N.BoolLit(t.text == "true", pos=self._pos(t))
        if self.at_kw("null"):
            self.next()
            return N.NullLit(pos=self._pos(t))
        if self.at_kw("NaN"):
            self.next()
            return N.DoubleLit(float("nan"), pos=self._pos(t))
        if self.at_kw("Infinity"):
            self.next()
            return N.DoubleLit(float("inf"), pos=self._pos(t))
        if self.at_kw("self"):
            self.next()
            return N.SelfRef(pos=self._pos(t))
        if self.at_kw("new"):
            self.next()
            nt = self.peek()
            if nt.kind == "kw" and nt.text in ("int", "double", "char"):
                self.next()
                self.eat_sym("[")
                length = self.parse_expr()
                self.eat_sym("]")
                return N.NewArray(nt.text, length, pos=self._pos(t))
            name = self.eat_ident().text
            args = self.parse_args()
            return N.New(name, args, pos=self._pos(t))
        if self.at_kw("length"):
            self.next()
            self.eat_sym("(")
            arr = self.parse_expr()
            self.eat_sym(")")
            return N.ArrayLength(arr, pos=self._pos(t))
        if self.at_kw("unfilled"):
            self.next()
            self.eat_sym("(")
            idt = self.peek()
            if idt.kind != "int":
                raise ParseError("unfilled expects a hole id", idt.line, idt.col)
            self.next()
            self.eat_sym(")")
            return N.Unfilled(int(idt.value), pos=self._pos(t))
        if self.at_kw("ticks"):
            self.next()
            self.eat_sym("(")
            self.eat_sym(")")
            return N.Ticks(pos=self._pos(t))
        if self.at_sym("?"):
            return self.parse_hole()
        if t.kind == "ident":
            self.next()
            if self.at_sym("("):
                args = self.parse_args()
                return N.Call(t.text, args, pos=self._pos(t))
            return N.Ident(t.text, pos=self._pos(t))
        if self.at_sym("("):
            self.next()
            e = self.parse_expr()
            self.eat_sym(")")
            return e
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col)

    # -- hole markers ---------------------------------------------------------

    def parse_hole(self) -> N.Hole:
        t = self.eat_sym("?")
        idt = self.eat_ident()
        if not (idt.text.startswith("H") and idt.text[1:].isdigit()):
            raise ParseError("hole marker must look like ?H<k>{...}", idt.line, idt.col)
        hole_id = int(idt.text[1:])
        spec = self.parse_hole_spec(hole_id)
        if hole_id in self.holes:
            raise ParseError(f"duplicate hole id {hole_id}", idt.line, idt.col)
        self.holes[hole_id] = spec
        return N.Hole(hole_id, spec=spec, pos=self._pos(t))

    def parse_hole_spec(self, hole_id: int) -> N.HoleSpec:
        self.eat_sym("{")
        t = self.peek()

        def eat_key(key: str):
            kt = self.eat_ident()
            if kt.text != key:
                raise ParseError(f"expected {key!r} in hole spec", kt.line, kt.col)
            self.eat_sym("=")

        eat_key("kind")
        kind = self.eat_ident().text
        if kind not in N.HOLE_KINDS:
            raise ParseError(f"unknown hole kind {kind!r}", t.line, t.col)
        self.eat_sym(";")
        eat_key("type")
        ty = self.parse_type()
        self.eat_sym(";")
        eat_key("ops")
        self.eat_sym("{")
        ops: list[str] = []
        while not self.at_sym("}"):
            if ops:
                self.eat_sym(",")
            op = self.peek()
            if op.kind != "sym":
                raise ParseError("operator expected in ops set", op.line, op.col)
            ops.append(self.next().text)
        self.eat_sym("}")
        self.eat_sym(";")
        eat_key("operands")
        self.eat_sym("[")
        operands: list[N.HoleSpec | N.FixedOperand] = []
        while not self.at_sym("]"):
            if operands:
                self.eat_sym(",")
            if self.at_kw("fixed"):
                self.next()
                self.eat_sym("(")
                operands.append(N.FixedOperand(self.parse_expr()))
                self.eat_sym(")")
            else:
                operands.append(self.parse_hole_spec(0))
        self.eat_sym("]")
        source = None
        if self.at_sym(";"):
            self.next()
            if not self.at_sym("}"):
                eat_key("src")
                self.eat_sym("(")
                source = self.parse_expr()
                self.eat_sym(")")
        self.eat_sym("}")
        return N.HoleSpec(hole_id, kind, ty, tuple(ops), operands, source)


def parse_program(src: str, name: str = "unit") -> N.Program:
    """Parse source text into an unresolved Program (syntax only)."""
    return Parser(src, name).parse_program()


def parse_expr_text(src: str) -> N.Expr:
    """Parse a standalone (unresolved) expression, e.g. a serialized literal."""
    p = Parser(src, "<expr>")
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return e
