"""Generation phase and checksum harness.

A template is executed session by session: globals re-initialize, the
argument providers run once, and the entry is called repeatedly under a
filling oracle until every hole is decided or the iteration cap is hit.
Each session emits a concrete program: decided holes are substituted
textually, undecided ones become `unfilled(id)` intrinsics, and a harness
declaration with the loop count is appended. Sessions that trap before
entering the entry function are dropped.

The harness drives any engine the same way: build the arguments once, hash
them, call the entry `iterations` times hashing each returned value or trap
kind name (an unfilled-hole trap aborts the run as a crash), then hash every
global in declaration order and report the 16-hex-digit checksum.
"""

from __future__ import annotations

import copy
import random
import time
from dataclasses import dataclass, field

from .checksum import Checksum
from .errors import UNFILLED_HOLE, LimitExceeded, Trap
from .extract import Template
from .fill import FillingOracle
from .interp import Budget, ExecLimits, Interpreter
from .lang import nodes as N
from .lang import parse, print_expr, print_program
from .optvm import VM, compile_program
from .seeds import split

CRASH_UNFILLED = "UnfilledHole"
CRASH_INTERNAL = "EngineInternal"
CRASH_LIMIT = "Limit"


@dataclass(frozen=True)
class GenConfig:
    programs_per_template: int = 10
    max_fill_iterations: int = 100
    template_timeout: float = 180.0
    harness_loop_count: int = 100_000
    rng_seed: int = 0
    limits: ExecLimits = field(default_factory=ExecLimits)


@dataclass
class GenSession:
    index: int
    seed: int
    status: str  # Complete | PartialAfterN | SkippedPreEntry
    decisions: dict[int, str]
    fill_iterations: int


@dataclass
class GeneratedProgram:
    template: str
    session: GenSession
    program: N.Program  # parsed back from `text`; fully typechecked
    text: str


@dataclass
class GenerationResult:
    programs: list[GeneratedProgram]
    sessions: list[GenSession]
    timed_out: bool = False


def _substitute(e: N.Expr, decisions: dict[int, N.Expr]) -> N.Expr:
    if isinstance(e, N.Hole):
        picked = decisions.get(e.hole_id)
        if picked is None:
            return N.Unfilled(e.hole_id)
        return picked
    for name in ("operand", "lhs", "rhs", "target", "array", "index", "length"):
        if hasattr(e, name):
            child = getattr(e, name)
            if isinstance(child, N.Expr):
                setattr(e, name, _substitute(child, decisions))
    if isinstance(e, (N.Call, N.New)):
        e.args = [_substitute(a, decisions) for a in e.args]
        if isinstance(e, N.Call) and e.receiver is not None:
            e.receiver = _substitute(e.receiver, decisions)
    return e


def _substitute_stmt(s: N.Stmt, decisions: dict[int, N.Expr]) -> None:
    for sub in N.walk_stmts(s):
        if isinstance(sub, N.VarDecl):
            sub.init = _substitute(sub.init, decisions)
        elif isinstance(sub, N.Assign):
            sub.target = _substitute(sub.target, decisions)
            sub.value = _substitute(sub.value, decisions)
        elif isinstance(sub, N.ExprStmt):
            sub.expr = _substitute(sub.expr, decisions)
        elif isinstance(sub, N.If):
            sub.cond = _substitute(sub.cond, decisions)
        elif isinstance(sub, N.While):
            sub.cond = _substitute(sub.cond, decisions)
        elif isinstance(sub, N.For):
            if sub.cond is not None:
                sub.cond = _substitute(sub.cond, decisions)
        elif isinstance(sub, N.Return) and sub.value is not None:
            sub.value = _substitute(sub.value, decisions)


def emit_program(template: Template, decisions: dict[int, N.Expr], iterations: int) -> tuple[N.Program, str]:
    """Substitute decided holes, leave `unfilled(id)` at undecided sites, and
    append the harness driver; the emitted text is re-parsed so every emitted
    program is known to parse and typecheck."""
    unit = copy.deepcopy(template.unit)
    for g in unit.globals:
        g.init = _substitute(g.init, decisions)
    for fn in unit.functions:
        for s in fn.body.stmts:
            _substitute_stmt(s, decisions)
    unit.holes = {}
    h = unit.harness
    unit.harness = N.HarnessDecl(h.entry, h.providers, h.args_from, iterations)
    text = print_program(unit)
    program = parse(text, template.unit.name)
    return program, text


def _build_args(program: N.Program, engine, state, budget: Budget) -> list:
    h = program.harness
    if h.args_from is not None:
        tup = engine.call(state, h.args_from, [], budget)
        rec = program.record(program.function(h.args_from).ret.name)
        return [tup.values[f.name] for f in rec.fields]
    return [engine.call(state, name, [], budget) for name in (h.providers or [])]


def generate(template: Template, cfg: GenConfig) -> GenerationResult:
    """Run `programs_per_template` filling sessions; emit a concrete program
    per session that reached the entry."""
    deadline = time.monotonic() + cfg.template_timeout
    programs: list[GeneratedProgram] = []
    sessions: list[GenSession] = []
    total_holes = len(template.holes)
    entry = template.unit.harness.entry
    timed_out = False

    for idx in range(cfg.programs_per_template):
        if time.monotonic() > deadline:
            timed_out = True
            break
        seed = split(cfg.rng_seed, template.name, idx)
        oracle = FillingOracle(template.unit, random.Random(seed))
        interp = Interpreter(template.unit, oracle, tick_seed=seed & 0xFFFFFFFF)
        budget = Budget(cfg.limits)
        skipped = False
        try:
            state, init_traps = interp.init_globals_lenient(budget)
            if any(kind != UNFILLED_HOLE for _, kind in init_traps):
                skipped = True
        except LimitExceeded:
            skipped = True
        args = None
        if not skipped:
            try:
                args = _build_args(template.unit, interp, state, budget)
            except (Trap, LimitExceeded):
                skipped = True
        fill_iters = 0
        if not skipped:
            while len(oracle.decisions) < total_holes and fill_iters < cfg.max_fill_iterations:
                if time.monotonic() > deadline:
                    timed_out = True
                    break
                before = len(oracle.decisions)
                interp.call_outcome(state, entry, args, Budget(cfg.limits))
                fill_iters += 1
                if len(oracle.decisions) == before and fill_iters >= min(
                    cfg.harness_loop_count, cfg.max_fill_iterations
                ):
                    break
        decisions_text = {hid: print_expr(e) for hid, e in sorted(oracle.decisions.items())}
        if skipped:
            status = "SkippedPreEntry"
        elif len(oracle.decisions) == total_holes:
            status = "Complete"
        else:
            status = "PartialAfterN"
        session = GenSession(idx, seed, status, decisions_text, fill_iters)
        sessions.append(session)
        if skipped:
            continue
        program, text = emit_program(template, oracle.decisions, cfg.harness_loop_count)
        programs.append(GeneratedProgram(template.name, session, program, text))
    return GenerationResult(programs, sessions, timed_out)


# -- engines -------------------------------------------------------------------


class InterpEngine:
    """Reference interpreter behind the common engine surface."""

    def __init__(self, program: N.Program, tick_seed: int | None = None):
        self._interp = Interpreter(program, tick_seed=tick_seed)

    def init_globals(self, budget: Budget) -> dict:
        return self._interp.init_globals(budget)

    def call(self, state: dict, key: str, args: list, budget: Budget):
        return self._interp.call(state, key, args, budget)


class VmEngine:
    """Compiled bytecode VM at one optimization level / fault set."""

    def __init__(
        self,
        program: N.Program,
        level: str = "L0",
        faults: frozenset[str] = frozenset(),
        tick_seed: int | None = None,
    ):
        self.module = compile_program(program, level, faults)
        self._vm = VM(self.module, tick_seed=tick_seed)

    def init_globals(self, budget: Budget) -> dict:
        return self._vm.init_globals(budget)

    def call(self, state: dict, key: str, args: list, budget: Budget):
        return self._vm.call(state, key, args, budget)


@dataclass(frozen=True)
class HarnessResult:
    checksum: int | None
    crash: str | None  # CRASH_UNFILLED | CRASH_INTERNAL | CRASH_LIMIT

    @property
    def ok(self) -> bool:
        return self.crash is None

    def checksum_hex(self) -> str:
        assert self.checksum is not None
        return f"{self.checksum:016x}"


def run_harness(program: N.Program, engine, limits: ExecLimits | None = None) -> HarnessResult:
    """Drive one executable program through `engine` and hash its behavior."""
    h = program.harness
    if h is None or h.iterations is None:
        raise ValueError("program has no harness driver")
    entry_fn = program.function(h.entry)
    budget = Budget(limits or ExecLimits())

    def crash_of(exc) -> HarnessResult:
        if isinstance(exc, Trap):
            if exc.kind == UNFILLED_HOLE:
                return HarnessResult(None, CRASH_UNFILLED)
            return HarnessResult(None, CRASH_INTERNAL)
        return HarnessResult(None, CRASH_LIMIT)

    try:
        state = engine.init_globals(budget)
        args = _build_args(program, engine, state, budget)
    except (Trap, LimitExceeded) as exc:
        return crash_of(exc)

    cs = Checksum()
    for value, ty in zip(args, entry_fn.signature()):
        cs.update(ty.tag, value)
    for _ in range(h.iterations):
        try:
            value = engine.call(state, h.entry, args, budget)
            cs.update(entry_fn.ret.tag, value)
        except Trap as t:
            if t.kind == UNFILLED_HOLE:
                return HarnessResult(None, CRASH_UNFILLED)
            cs.update_trap(t.kind)
        except LimitExceeded:
            return HarnessResult(None, CRASH_LIMIT)
    for g in program.globals:
        cs.update(g.ty.tag, state[g.name])
    return HarnessResult(cs.value, None)


def make_executable(
    program: N.Program,
    entry: str,
    literal_args: list[N.Expr],
    iterations: int,
    name: str | None = None,
) -> N.Program:
    """Wrap a hole-free program with literal-returning providers and a
    harness; used for regression fixtures and directly-runnable programs."""
    unit = copy.deepcopy(program)
    entry_fn = unit.function(entry)
    sig = entry_fn.signature()
    if len(sig) != len(literal_args):
        raise ValueError(f"{entry} takes {len(sig)} args")
    names = []
    for i, (ty, lit) in enumerate(zip(sig, literal_args)):
        fname = f"_arg{i}"
        unit.functions.append(N.FunctionDecl(fname, None, [], ty, N.Block([N.Return(lit)])))
        names.append(fname)
    unit.harness = N.HarnessDecl(entry, providers=names, iterations=iterations)
    text = print_program(unit)
    return parse(text, name or unit.name)
