"""Extraction phase: turn a program + entry function into a template.

Every expression in every function (and in global initializers) is converted
recursively into a typed hole when its category is enabled: identifiers and
literals become terminal Id/Val holes; arithmetic, shift, relational,
logical, array-access and cast expressions become composite holes whose
operands convert in turn. Expressions outside the hole grammar (calls,
constructions, reference equality, `self`, ++/--) stay verbatim with their
value sub-positions converted. Under a restricted kind set, excluded
sub-expressions are kept as fixed operands inside composite holes.

After conversion, every loop whose guard contains a hole gains a fresh
counter conjoined to the guard (`&& _limN++ < bound`), and argument provider
functions are synthesized: a single tuple-returning function replaying the
recorded call sequence (test-based), or one function per parameter drawing a
literal hole / pool sequence / null (pool-based).
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field

from .corpus import CallSequence, ObjectPool, pick_from_pool
from .errors import ExtractError
from .lang import check_program
from .lang import nodes as N

HOLE_KIND_SETS: dict[str, frozenset[str]] = {
    "id": frozenset({N.KIND_ID}),
    "val": frozenset({N.KIND_VAL}),
    "arith-shift": frozenset({N.KIND_ARITH, N.KIND_SHIFT}),
    "rel-logic": frozenset({N.KIND_RELATION, N.KIND_LOGIC}),
    "all": frozenset(N.HOLE_KINDS),
}

_DEFAULT_LITS = {
    "int": lambda: N.IntLit(0),
    "double": lambda: N.DoubleLit(0.0),
    "bool": lambda: N.BoolLit(False),
    "char": lambda: N.CharLit(ord("a")),
}


@dataclass
class ArgProvider:
    fn_name: str
    source: str  # "recorded" | "val-hole" | "default" | "pool" | "null"
    sequence: CallSequence | None = None


@dataclass
class ExtractionRequest:
    program: N.Program
    entry: str
    mode: str  # "test" | "pool"
    hole_kinds: frozenset[str] = HOLE_KIND_SETS["all"]
    recorded: CallSequence | None = None  # test mode: last call targets entry
    pool: ObjectPool | None = None  # pool mode
    limiter_bound: int = 1000
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    name: str | None = None


@dataclass
class Template:
    name: str
    unit: N.Program  # holes, limiters, providers, harness (no iteration count)
    entry: str
    mode: str
    holes: dict[int, N.HoleSpec]
    limiters: list[tuple[str, int]]  # (counter variable, bound)
    providers: list[ArgProvider]
    source_program: N.Program
    recorded: CallSequence | None

    def hole_counts(self) -> dict[str, int]:
        acc = {k: 0 for k in N.HOLE_KINDS}
        for spec in self.holes.values():
            for k, n in spec.counts().items():
                acc[k] += n
        return acc


# -- conversion -----------------------------------------------------------------


class _Converter:
    def __init__(self, kinds: frozenset[str]):
        self.kinds = kinds
        self.counter = 0
        self.holes: dict[int, N.HoleSpec] = {}

    def convert_program(self, unit: N.Program) -> None:
        for g in unit.globals:
            g.init = self.top(g.init)
        for fn in unit.functions:
            self.convert_block(fn.body)
        unit.holes = self.holes

    def convert_block(self, b: N.Block) -> None:
        for s in b.stmts:
            self.convert_stmt(s)

    def convert_stmt(self, s: N.Stmt) -> None:
        if isinstance(s, N.VarDecl):
            s.init = self.top(s.init)
        elif isinstance(s, N.Assign):
            s.value = self.top(s.value)
            if isinstance(s.target, N.ArrayAccess):
                s.target.index = self.top(s.target.index)
        elif isinstance(s, N.ExprStmt):
            s.expr = self.top(s.expr)
        elif isinstance(s, N.If):
            s.cond = self.top(s.cond)
            self.convert_block(s.then)
            if s.orelse is not None:
                if isinstance(s.orelse, N.If):
                    self.convert_stmt(s.orelse)
                else:
                    self.convert_block(s.orelse)
        elif isinstance(s, N.While):
            s.cond = self.top(s.cond)
            self.convert_block(s.body)
        elif isinstance(s, N.For):
            if s.init is not None:
                self.convert_stmt(s.init)
            if s.cond is not None:
                s.cond = self.top(s.cond)
            if s.update is not None:
                self.convert_stmt(s.update)
            self.convert_block(s.body)
        elif isinstance(s, N.Return):
            if s.value is not None:
                s.value = self.top(s.value)
        elif isinstance(s, N.Block):
            self.convert_block(s)

    def top(self, e: N.Expr) -> N.Expr:
        """Convert one maximal value position; returns the replacement."""
        spec = self._spec(e)
        if spec is not None:
            self.counter += 1
            spec.hole_id = self.counter
            spec.source = e
            self.holes[self.counter] = spec
            hole = N.Hole(self.counter, spec=spec)
            hole.ty = spec.ty
            hole.pos = getattr(e, "pos", None)
            return hole
        self._convert_children(e)
        return e

    def _convert_children(self, e: N.Expr) -> None:
        if isinstance(e, N.Unary):
            e.operand = self.top(e.operand)
        elif isinstance(e, N.Cast):
            e.operand = self.top(e.operand)
        elif isinstance(e, N.Binary):
            e.lhs = self.top(e.lhs)
            e.rhs = self.top(e.rhs)
        elif isinstance(e, N.ArrayAccess):
            e.array = self.top(e.array)
            e.index = self.top(e.index)
        elif isinstance(e, N.ArrayLength):
            e.array = self.top(e.array)
        elif isinstance(e, N.FieldAccess):
            if not isinstance(e.target, N.SelfRef):
                e.target = self.top(e.target)
        elif isinstance(e, N.Call):
            if e.receiver is not None and not isinstance(e.receiver, N.SelfRef):
                e.receiver = self.top(e.receiver)
            e.args = [self.top(a) for a in e.args]
        elif isinstance(e, N.New):
            e.args = [self.top(a) for a in e.args]
        elif isinstance(e, N.NewArray):
            e.length = self.top(e.length)
        # identifiers, literals, self, null, ++/--: nothing to convert inside

    def _spec(self, e: N.Expr) -> N.HoleSpec | None:
        """The hole spec for `e` if its category is an enabled kind."""
        k = self.kinds
        if isinstance(e, N.Ident) and N.KIND_ID in k:
            return N.HoleSpec(0, N.KIND_ID, e.ty, (), [])
        if isinstance(e, (N.IntLit, N.DoubleLit, N.BoolLit, N.CharLit)) and N.KIND_VAL in k:
            return N.HoleSpec(0, N.KIND_VAL, e.ty, (), [])
        if isinstance(e, N.Binary):
            if e.op in N.ARITH_OPS and e.op_kind in ("int", "double") and N.KIND_ARITH in k:
                return N.HoleSpec(
                    0, N.KIND_ARITH, e.ty, N.ARITH_OPS, [self._operand(e.lhs), self._operand(e.rhs)]
                )
            if e.op in N.SHIFT_OPS and N.KIND_SHIFT in k:
                return N.HoleSpec(
                    0, N.KIND_SHIFT, N.INT, N.SHIFT_OPS, [self._operand(e.lhs), self._operand(e.rhs)]
                )
            if e.op in N.REL_OPS and e.op_kind in ("int", "double", "char") and N.KIND_RELATION in k:
                return N.HoleSpec(
                    0, N.KIND_RELATION, N.BOOL, N.REL_OPS, [self._operand(e.lhs), self._operand(e.rhs)]
                )
            if e.op in N.LOGIC_OPS and N.KIND_LOGIC in k:
                return N.HoleSpec(
                    0, N.KIND_LOGIC, N.BOOL, N.LOGIC_OPS, [self._operand(e.lhs), self._operand(e.rhs)]
                )
            return None
        if isinstance(e, N.ArrayAccess) and N.KIND_ARRAY_ACC in k:
            return N.HoleSpec(
                0, N.KIND_ARRAY_ACC, e.ty, (), [self._operand(e.array), self._operand(e.index)]
            )
        if isinstance(e, N.Cast) and N.KIND_CAST in k:
            return N.HoleSpec(0, N.KIND_CAST, e.to, (), [self._operand(e.operand)])
        return None

    def _operand(self, e: N.Expr) -> N.HoleSpec | N.FixedOperand:
        spec = self._spec(e)
        if spec is not None:
            spec.source = e
            return spec
        return N.FixedOperand(e)


# -- loop limiters ----------------------------------------------------------------


def _guard_has_hole(e: N.Expr) -> bool:
    return any(isinstance(x, N.Hole) for x in N.walk_exprs(e))


class _LimiterInserter:
    def __init__(self, bound: int):
        self.bound = bound
        self.counter = 0
        self.added: list[tuple[str, int]] = []

    def rewrite_block(self, b: N.Block) -> None:
        out: list[N.Stmt] = []
        for s in b.stmts:
            if isinstance(s, (N.While, N.For)) and s.cond is not None and _guard_has_hole(s.cond):
                self.counter += 1
                name = f"_lim{self.counter}"
                self.added.append((name, self.bound))
                out.append(N.VarDecl(N.INT, name, N.IntLit(0)))
                s.cond = N.Binary("&&", s.cond, N.Binary("<", N.PostIncDec("++", name), N.IntLit(self.bound)))
            out.append(s)
            self._recurse(s)
        b.stmts = out

    def _recurse(self, s: N.Stmt) -> None:
        if isinstance(s, (N.While, N.For)):
            self.rewrite_block(s.body)
        elif isinstance(s, N.If):
            self.rewrite_block(s.then)
            if isinstance(s.orelse, N.Block):
                self.rewrite_block(s.orelse)
            elif isinstance(s.orelse, N.If):
                self._recurse(s.orelse)
        elif isinstance(s, N.Block):
            self.rewrite_block(s)


def insert_loop_limiters(unit: N.Program, bound: int) -> list[tuple[str, int]]:
    """Bound every hole-guarded loop: declare `int _limN = 0;` before it and
    rewrite the guard to `(guard) && _limN++ < bound`."""
    ins = _LimiterInserter(bound)
    for fn in unit.functions:
        ins.rewrite_block(fn.body)
    return ins.added


# -- argument providers --------------------------------------------------------------


def _lit_expr(tag: str, value) -> N.Expr:
    if tag == "int":
        return N.IntLit(value)
    if tag == "double":
        return N.DoubleLit(value)
    if tag == "bool":
        return N.BoolLit(value)
    return N.CharLit(value)


def _step_expr(step) -> N.Expr:
    args: list[N.Expr] = []
    for a in step.args:
        if a[0] == "lit":
            args.append(_lit_expr(a[1], a[2]))
        else:
            args.append(N.Ident(a[1]))
    if step.kind == "new":
        return N.New(step.callee, args)
    if "." in step.callee:
        _, mname = step.callee.split(".", 1)
        return N.Call(mname, args[1:], receiver=args[0])
    return N.Call(step.callee, args)


def _sequence_stmts(steps) -> list[N.Stmt]:
    out: list[N.Stmt] = []
    for step in steps:
        call = _step_expr(step)
        if step.result_type == N.UNIT:
            out.append(N.ExprStmt(call))
        else:
            out.append(N.VarDecl(step.result_type, step.bind, call))
    return out


def _converted_val_hole(conv: _Converter, ty: N.Type) -> N.Hole:
    conv.counter += 1
    spec = N.HoleSpec(conv.counter, N.KIND_VAL, ty, (), [], source=_lit_expr(ty.tag, _DEFAULT_LITS[ty.tag]().value))
    conv.holes[conv.counter] = spec
    hole = N.Hole(conv.counter, spec=spec)
    hole.ty = ty
    return hole


def _build_test_providers(
    unit: N.Program, entry_fn: N.FunctionDecl, recorded: CallSequence
) -> tuple[list[ArgProvider], N.HarnessDecl]:
    sig = entry_fn.signature()
    if not sig:
        return [], N.HarnessDecl(entry_fn.key, providers=[])
    last = recorded.steps[-1]
    if last.callee != entry_fn.key:
        raise ExtractError(f"recorded input ends in {last.callee}, not {entry_fn.key}")
    fields = [N.Param(ty, f"_a{i}") for i, ty in enumerate(sig)]
    unit.records.append(N.RecordDecl("_Args", fields))
    arg_exprs: list[N.Expr] = []
    for a in last.args:
        if a[0] == "lit":
            arg_exprs.append(_lit_expr(a[1], a[2]))
        else:
            arg_exprs.append(N.Ident(a[1]))
    body = _sequence_stmts(recorded.steps[:-1])
    body.append(N.Return(N.New("_Args", arg_exprs)))
    unit.functions.append(
        N.FunctionDecl("_args", None, [], N.record_ref("_Args"), N.Block(body))
    )
    providers = [ArgProvider("_args", "recorded", recorded)]
    return providers, N.HarnessDecl(entry_fn.key, args_from="_args")


def _build_pool_providers(
    unit: N.Program,
    entry_fn: N.FunctionDecl,
    pool: ObjectPool,
    kinds: frozenset[str],
    conv: _Converter,
    rng: random.Random,
) -> tuple[list[ArgProvider], N.HarnessDecl]:
    providers: list[ArgProvider] = []
    names: list[str] = []
    for i, ty in enumerate(entry_fn.signature()):
        fn_name = f"_arg{i}"
        if ty.is_primitive:
            if N.KIND_VAL in kinds:
                body = [N.Return(_converted_val_hole(conv, ty))]
                providers.append(ArgProvider(fn_name, "val-hole"))
            else:
                body = [N.Return(_lit_expr(ty.tag, _DEFAULT_LITS[ty.tag]().value))]
                providers.append(ArgProvider(fn_name, "default"))
        else:
            seq = pick_from_pool(ty, pool, rng)
            if seq is not None:
                body = _sequence_stmts(seq.steps) + [N.Return(N.Ident(seq.result_name))]
                providers.append(ArgProvider(fn_name, "pool", seq))
            elif ty.tag == "record":
                body = [N.Return(N.NullLit())]
                providers.append(ArgProvider(fn_name, "null"))
            else:
                raise ExtractError(
                    f"{entry_fn.key}: parameter {i} of type {ty} is unconstructible "
                    "(no pool entry, and arrays have no null)"
                )
        unit.functions.append(N.FunctionDecl(fn_name, None, [], ty, N.Block(body)))
        names.append(fn_name)
    return providers, N.HarnessDecl(entry_fn.key, providers=names)


# -- extraction driver -------------------------------------------------------------------


def extract(req: ExtractionRequest) -> Template:
    """Clone the unit, convert expressions to holes, bound holed loops,
    synthesize argument providers, and validate the result."""
    program = req.program
    entry_fn = program.function(req.entry)
    if entry_fn is None:
        raise ExtractError(f"no entry {req.entry} in {program.name}")
    if req.mode not in ("test", "pool"):
        raise ExtractError(f"unknown extraction mode {req.mode}")
    if req.mode == "test" and req.recorded is None:
        raise ExtractError("test mode needs a recorded input")

    unit = copy.deepcopy(program)
    conv = _Converter(req.hole_kinds)
    conv.convert_program(unit)
    limiters = insert_loop_limiters(unit, req.limiter_bound)

    entry_clone = unit.function(req.entry)
    if req.mode == "test":
        providers, harness = _build_test_providers(unit, entry_clone, req.recorded)
    else:
        providers, harness = _build_pool_providers(
            unit, entry_clone, req.pool or ObjectPool({}), req.hole_kinds, conv, req.rng
        )
    unit.harness = harness
    unit.holes = conv.holes
    check_program(unit)

    name = req.name or f"{program.name}__{req.entry.replace('.', '_')}__{req.mode}"
    return Template(
        name=name,
        unit=unit,
        entry=req.entry,
        mode=req.mode,
        holes=conv.holes,
        limiters=limiters,
        providers=providers,
        source_program=program,
        recorded=req.recorded,
    )


def convert(e: N.Expr, kinds: frozenset[str] = HOLE_KIND_SETS["all"]):
    """Convert one typechecked expression; returns a HoleSpec or the verbatim
    expression with converted sub-positions (children mutated in place)."""
    conv = _Converter(kinds)
    spec = conv._spec(e)
    if spec is not None:
        spec.source = e
        return spec
    conv._convert_children(e)
    return e
