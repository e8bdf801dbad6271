"""MiniJ abstract syntax: types, expressions, statements, declarations.

MiniJ is a small Java-flavored imperative language: 32-bit wrapping ints,
IEEE-754 doubles, bools, 16-bit chars, arrays of primitives, records with
reference identity, top-level functions (optionally with a record receiver),
and global variables. Expressions may additionally be typed holes, which only
occur inside templates and in programs generated from them.

Node equality is structural; type annotations and source positions are
excluded from comparison so a re-parsed tree equals the tree it was printed
from.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Type:
    tag: str  # int | double | bool | char | unit | array | record
    elem: str = ""  # element tag for arrays: int | double | char
    name: str = ""  # record name for records

    def __str__(self) -> str:
        if self.tag == "array":
            return f"{self.elem}[]"
        if self.tag == "record":
            return self.name
        return self.tag

    @property
    def is_primitive(self) -> bool:
        return self.tag in ("int", "double", "bool", "char")

    @property
    def is_reference(self) -> bool:
        return self.tag in ("array", "record")


INT = Type("int")
DOUBLE = Type("double")
BOOL = Type("bool")
CHAR = Type("char")
UNIT = Type("unit")


def array_of(elem_tag: str) -> Type:
    assert elem_tag in ("int", "double", "char"), elem_tag
    return Type("array", elem=elem_tag)


def record_ref(name: str) -> Type:
    return Type("record", name=name)


PRIMITIVES = {"int": INT, "double": DOUBLE, "bool": BOOL, "char": CHAR}

# Operator classes.
ARITH_OPS = ("+", "-", "*", "/", "%")
SHIFT_OPS = ("<<", ">>", ">>>")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1
MAX_ARRAY_LEN = 1 << 20  # larger allocations trap IndexOutOfBounds

# ---------------------------------------------------------------------------
# Hole specifications
# ---------------------------------------------------------------------------

KIND_ID = "Id"
KIND_VAL = "Val"
KIND_ARITH = "Arith"
KIND_SHIFT = "Shift"
KIND_RELATION = "Relation"
KIND_LOGIC = "Logic"
KIND_ARRAY_ACC = "ArrayAcc"
KIND_CAST = "Cast"

HOLE_KINDS = (
    KIND_ID,
    KIND_VAL,
    KIND_ARITH,
    KIND_SHIFT,
    KIND_RELATION,
    KIND_LOGIC,
    KIND_ARRAY_ACC,
    KIND_CAST,
)

TERMINAL_KINDS = (KIND_ID, KIND_VAL)


@dataclass
class FixedOperand:
    """A composite-hole operand kept verbatim: the fill reuses this expression."""

    expr: "Expr"


@dataclass
class HoleSpec:
    """One typed hole: its kind, result type, operator set and operand shape.

    `operands` entries are nested HoleSpecs (their sub-expressions are refilled)
    or FixedOperands (kept as written). `source` is the expression the hole
    replaced; it is by construction a legal member of the hole's search space.
    Only top-level (evaluable) specs carry a hole id; nested specs use id 0.
    """

    hole_id: int
    kind: str
    ty: Type
    ops: tuple[str, ...]
    operands: list["HoleSpec | FixedOperand"]
    source: "Expr | None" = None

    def counts(self) -> dict[str, int]:
        """Per-kind spec counts, nested specs included."""
        acc = {k: 0 for k in HOLE_KINDS}
        self._count_into(acc)
        return acc

    def _count_into(self, acc: dict[str, int]) -> None:
        acc[self.kind] += 1
        for op in self.operands:
            if isinstance(op, HoleSpec):
                op._count_into(acc)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

# Annotation conventions (set by the typechecker, excluded from equality):
#   .ty       static type of the expression
#   .binding  for Ident: "local" | "param" | "field" | "global"
#   .op_kind  for Binary/Unary: operand class, e.g. "int", "double", "char",
#             "bool", "ref"
#   .pos      (line, col) of the first token


def _ann():
    return field(default=None, compare=False, repr=False)


@dataclass
class Expr:
    pass


@dataclass
class IntLit(Expr):
    value: int
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class DoubleLit(Expr):
    # Stored raw bits aside so -0.0 and 0.0 compare as distinct literals.
    value: float
    ty: object = _ann()
    pos: object = _ann()

    def __eq__(self, other):
        if not isinstance(other, DoubleLit):
            return NotImplemented
        return struct.pack(">d", self.value) == struct.pack(">d", other.value)


@dataclass
class BoolLit(Expr):
    value: bool
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class CharLit(Expr):
    value: int  # code unit, 0..0xFFFF
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class NullLit(Expr):
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class Ident(Expr):
    name: str
    ty: object = _ann()
    binding: object = _ann()
    pos: object = _ann()


@dataclass
class SelfRef(Expr):
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class FieldAccess(Expr):
    target: Expr
    fieldname: str
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class ArrayAccess(Expr):
    array: Expr
    index: Expr
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class ArrayLength(Expr):
    array: Expr
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class Unary(Expr):
    op: str  # "-" | "!"
    operand: Expr
    ty: object = _ann()
    op_kind: object = _ann()
    pos: object = _ann()


@dataclass
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr
    ty: object = _ann()
    op_kind: object = _ann()
    pos: object = _ann()


@dataclass
class Cast(Expr):
    to: Type
    operand: Expr
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class Call(Expr):
    name: str
    args: list[Expr]
    receiver: Expr | None = None
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class New(Expr):
    record: str
    args: list[Expr]
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class NewArray(Expr):
    elem: str  # int | double | char
    length: Expr
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class PostIncDec(Expr):
    op: str  # "++" | "--"
    name: str  # int lvalue only; yields the old value
    ty: object = _ann()
    binding: object = _ann()
    pos: object = _ann()


@dataclass
class Hole(Expr):
    """An evaluable hole site; the spec lives in the enclosing unit's registry."""

    hole_id: int
    spec: HoleSpec = field(compare=False, repr=False, default=None)
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class Unfilled(Expr):
    """Intrinsic left where a hole was never decided; evaluating it traps."""

    hole_id: int
    ty: object = _ann()
    pos: object = _ann()


@dataclass
class Ticks(Expr):
    """Intrinsic int source that differs across runs; hosts nondeterminism."""

    ty: object = _ann()
    pos: object = _ann()


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass
class Stmt:
    pass


@dataclass
class VarDecl(Stmt):
    ty: Type
    name: str
    init: Expr
    pos: object = _ann()


@dataclass
class Assign(Stmt):
    target: Expr  # Ident | FieldAccess | ArrayAccess
    value: Expr
    pos: object = _ann()


@dataclass
class ExprStmt(Stmt):
    expr: Expr  # Call or PostIncDec
    pos: object = _ann()


@dataclass
class If(Stmt):
    cond: Expr
    then: "Block"
    orelse: "Block | If | None" = None
    pos: object = _ann()


@dataclass
class While(Stmt):
    cond: Expr
    body: "Block"
    pos: object = _ann()


@dataclass
class For(Stmt):
    init: Stmt | None  # VarDecl or Assign
    cond: Expr | None
    update: Stmt | None  # Assign or ExprStmt
    body: "Block"
    pos: object = _ann()


@dataclass
class Return(Stmt):
    value: Expr | None
    pos: object = _ann()


@dataclass
class Block(Stmt):
    stmts: list[Stmt]
    pos: object = _ann()


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass
class Param:
    ty: Type
    name: str


@dataclass
class GlobalDecl:
    ty: Type
    name: str
    init: Expr
    pos: object = _ann()


@dataclass
class RecordDecl:
    name: str
    fields: list[Param]
    pos: object = _ann()

    def field_type(self, name: str) -> Type | None:
        for f in self.fields:
            if f.name == name:
                return f.ty
        return None


@dataclass
class FunctionDecl:
    name: str
    receiver: str | None  # record name for methods
    params: list[Param]
    ret: Type
    body: Block
    pos: object = _ann()

    @property
    def key(self) -> str:
        return f"{self.receiver}.{self.name}" if self.receiver else self.name

    def signature(self) -> tuple[Type, ...]:
        """Argument types as the runtime sees them: receiver first, if any."""
        recv = (record_ref(self.receiver),) if self.receiver else ()
        return recv + tuple(p.ty for p in self.params)


@dataclass
class HarnessDecl:
    """Driver description appended to executable programs.

    Either `providers` (one zero-arg function per entry argument, receiver
    first) or `args_from` (a single function returning a tuple record whose
    fields are the entry arguments, in order) is set.
    """

    entry: str  # function key, e.g. "m" or "Buf.push"
    providers: list[str] | None = None
    args_from: str | None = None
    iterations: int | None = None
    pos: object = _ann()


@dataclass
class Program:
    name: str
    globals: list[GlobalDecl]
    records: list[RecordDecl]
    functions: list[FunctionDecl]
    harness: HarnessDecl | None = None
    holes: dict[int, HoleSpec] = field(default_factory=dict, compare=False, repr=False)

    def record(self, name: str) -> RecordDecl | None:
        for r in self.records:
            if r.name == name:
                return r
        return None

    def function(self, key: str) -> FunctionDecl | None:
        for f in self.functions:
            if f.key == key:
                return f
        return None

    def global_decl(self, name: str) -> GlobalDecl | None:
        for g in self.globals:
            if g.name == name:
                return g
        return None


def walk_exprs(e: Expr):
    """Yield `e` and every sub-expression, pre-order. Does not enter hole specs."""
    yield e
    for child in expr_children(e):
        yield from walk_exprs(child)


def expr_children(e: Expr) -> list[Expr]:
    if isinstance(e, (Unary, Cast)):
        return [e.operand]
    if isinstance(e, Binary):
        return [e.lhs, e.rhs]
    if isinstance(e, FieldAccess):
        return [e.target]
    if isinstance(e, ArrayAccess):
        return [e.array, e.index]
    if isinstance(e, ArrayLength):
        return [e.array]
    if isinstance(e, Call):
        return ([e.receiver] if e.receiver else []) + list(e.args)
    if isinstance(e, New):
        return list(e.args)
    if isinstance(e, NewArray):
        return [e.length]
    return []


def walk_stmts(s: Stmt):
    """Yield `s` and every nested statement."""
    yield s
    if isinstance(s, Block):
        for sub in s.stmts:
            yield from walk_stmts(sub)
    elif isinstance(s, If):
        yield from walk_stmts(s.then)
        if s.orelse is not None:
            yield from walk_stmts(s.orelse)
    elif isinstance(s, While):
        yield from walk_stmts(s.body)
    elif isinstance(s, For):
        if s.init is not None:
            yield from walk_stmts(s.init)
        if s.update is not None:
            yield from walk_stmts(s.update)
        yield from walk_stmts(s.body)


def stmt_exprs(s: Stmt) -> list[Expr]:
    """Top-level expressions owned directly by statement `s` (not nested stmts)."""
    if isinstance(s, VarDecl):
        return [s.init]
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, ExprStmt):
        return [s.expr]
    if isinstance(s, If):
        return [s.cond]
    if isinstance(s, While):
        return [s.cond]
    if isinstance(s, For):
        return [s.cond] if s.cond is not None else []
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    return []
