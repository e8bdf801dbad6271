"""Collection phase: feedback-free call-sequence generation and object pools.

Sequences are short chains of function calls / record constructions whose
arguments are literals or earlier bindings. A sequence becomes a test-based
entry (its last call is the entry, the whole sequence the recorded input) or
feeds the pool-based object pool (every reference-producing prefix, indexed
by result type). Sequences that trap during replay, blow the collection step
budget, or drive any single loop past the limiter bound are discarded, so
recorded inputs stay cleanly replayable.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .errors import LimitExceeded, Trap
from .interp import Budget, ExecLimits, Interpreter
from .lang import nodes as N
from .lang import values as V
from .lang.parser import parse_expr_text
from .lang.printer import print_expr

# Primitive argument material: a fixed literal pool plus seeded randoms.
_POOL = {
    "int": (0, 1, -1, 2, 10, N.INT_MIN, N.INT_MAX),
    "double": (0.0, 1.0, float("nan")),
    "bool": (True, False),
    "char": (ord("a"), ord(" ")),
}

COLLECT_LIMITS = ExecLimits(max_steps=200_000, max_heap_cells=1 << 20, max_depth=64)


@dataclass
class Step:
    bind: str
    kind: str  # "call" | "new"
    callee: str  # function key or record name
    args: list  # entries: ("lit", ty_tag, value) | ("ref", name)
    result_type: N.Type


@dataclass
class CallSequence:
    steps: list[Step]

    @property
    def result_name(self) -> str:
        return self.steps[-1].bind

    @property
    def result_type(self) -> N.Type:
        return self.steps[-1].result_type

    def prefix(self, k: int) -> "CallSequence":
        return CallSequence(self.steps[: k + 1])


@dataclass
class ObjectPool:
    by_type: dict[str, list[CallSequence]]

    def get(self, ty: N.Type) -> list[CallSequence]:
        return self.by_type.get(str(ty), [])


def _draw_primitive(tag: str, rng: random.Random):
    pool = _POOL[tag]
    if rng.random() < 0.75:
        return pool[rng.randrange(len(pool))]
    if tag == "int":
        return rng.randint(-100, 100)
    if tag == "double":
        return rng.uniform(-100.0, 100.0)
    if tag == "bool":
        return rng.random() < 0.5
    return rng.randint(32, 126)


def _callables(p: N.Program) -> list[tuple[str, str, tuple[N.Type, ...], N.Type]]:
    """(kind, name, argument types, result type) for every invocable thing."""
    out = []
    for fn in p.functions:
        out.append(("call", fn.key, fn.signature(), fn.ret))
    for r in p.records:
        out.append(("new", r.name, tuple(f.ty for f in r.fields), N.record_ref(r.name)))
    return out


def _pick_args(sig, bindings, rng) -> list | None:
    args = []
    for ty in sig:
        if ty.is_primitive:
            args.append(("lit", ty.tag, _draw_primitive(ty.tag, rng)))
        else:
            matches = [name for name, bty in bindings if bty == ty]
            if not matches:
                return None
            args.append(("ref", matches[rng.randrange(len(matches))]))
    return args


def replay_sequence(
    program: N.Program,
    seq: CallSequence,
    state: dict,
    interp: Interpreter,
    budget: Budget,
) -> dict[str, object]:
    """Execute the sequence against `state`; returns the bindings map.
    Raises Trap/LimitExceeded like any evaluation."""
    bindings: dict[str, object] = {}

    def arg_value(a):
        if a[0] == "lit":
            return a[2]
        return bindings[a[1]]

    for step in seq.steps:
        vals = [arg_value(a) for a in step.args]
        if step.kind == "call":
            bindings[step.bind] = interp.call(state, step.callee, vals, budget)
        else:
            rec = program.record(step.callee)
            budget.alloc(len(rec.fields) + 1)
            bindings[step.bind] = V.RecordV(rec, {f.name: v for f, v in zip(rec.fields, vals)})
    return bindings


def generate_sequences(
    program: N.Program,
    budget: int,
    seed: int,
    max_steps: int = 8,
    loop_bound: int = 1000,
) -> list[CallSequence]:
    """Deterministic under `seed`; attempts `budget` sequences, keeping those
    that replay trap-free from fresh globals within the collection limits."""
    rng = random.Random(seed)
    callables = _callables(program)
    out: list[CallSequence] = []
    if not callables:
        return out
    for _ in range(budget):
        target = rng.randint(1, max_steps)
        steps: list[Step] = []
        bindings: list[tuple[str, N.Type]] = []
        for k in range(target):
            eligible = []
            for kind, name, sig, ret in callables:
                if all(
                    ty.is_primitive or any(b == ty for _, b in bindings) for ty in sig
                ):
                    eligible.append((kind, name, sig, ret))
            if not eligible:
                break
            kind, name, sig, ret = eligible[rng.randrange(len(eligible))]
            args = _pick_args(sig, bindings, rng)
            if args is None:
                break
            bind = f"v{k}"
            steps.append(Step(bind, kind, name, args, ret))
            bindings.append((bind, ret))
        if not steps:
            continue
        seq = CallSequence(steps)
        interp = Interpreter(program, tick_seed=0)
        run_budget = Budget(COLLECT_LIMITS, loop_bound=loop_bound)
        try:
            state = interp.init_globals(run_budget)
            replay_sequence(program, seq, state, interp, run_budget)
        except (Trap, LimitExceeded):
            continue
        if run_budget.loop_overflow:
            continue
        out.append(seq)
    return out


def to_entries(seqs: list[CallSequence]) -> list[tuple[str, CallSequence]]:
    """(entry key, recorded input) for every sequence whose last step calls a
    function; the prefix plus the final call's argument bindings is the input."""
    out = []
    for seq in seqs:
        last = seq.steps[-1]
        if last.kind == "call":
            out.append((last.callee, seq))
    return out


def build_pool(seqs: list[CallSequence]) -> ObjectPool:
    """Index every reference-producing prefix of every sequence by its type."""
    by_type: dict[str, list[CallSequence]] = {}
    for seq in seqs:
        for k, step in enumerate(seq.steps):
            if step.result_type.is_reference:
                by_type.setdefault(str(step.result_type), []).append(seq.prefix(k))
    return ObjectPool(by_type)


def pick_from_pool(ty: N.Type, pool: ObjectPool, rng: random.Random) -> CallSequence | None:
    entries = pool.get(ty)
    if not entries:
        return None
    return entries[rng.randrange(len(entries))]


# -- serialization -------------------------------------------------------------


def _lit_text(tag: str, value) -> str:
    if tag == "int":
        return print_expr(N.IntLit(value))
    if tag == "double":
        return print_expr(N.DoubleLit(value))
    if tag == "bool":
        return print_expr(N.BoolLit(value))
    return print_expr(N.CharLit(value))


def _lit_value(tag: str, text: str):
    e = parse_expr_text(text)
    return e.value


def step_to_json(step: Step) -> dict:
    args = []
    for a in step.args:
        if a[0] == "lit":
            args.append({"lit": _lit_text(a[1], a[2]), "t": a[1]})
        else:
            args.append({"ref": a[1]})
    return {
        "bind": step.bind,
        "kind": step.kind,
        "callee": step.callee,
        "args": args,
        "type": str(step.result_type),
    }


def _type_from_str(text: str, program: N.Program) -> N.Type:
    if text.endswith("[]"):
        return N.array_of(text[:-2])
    if text in N.PRIMITIVES:
        return N.PRIMITIVES[text]
    if text == "unit":
        return N.UNIT
    return N.record_ref(text)


def step_from_json(d: dict, program: N.Program) -> Step:
    args = []
    for a in d["args"]:
        if "lit" in a:
            args.append(("lit", a["t"], _lit_value(a["t"], a["lit"])))
        else:
            args.append(("ref", a["ref"]))
    return Step(d["bind"], d["kind"], d["callee"], args, _type_from_str(d["type"], program))


def sequence_to_json(seq: CallSequence) -> dict:
    return {"steps": [step_to_json(s) for s in seq.steps]}


def sequence_from_json(d: dict, program: N.Program) -> CallSequence:
    return CallSequence([step_from_json(s, program) for s in d["steps"]])


def save_pool(pool: ObjectPool, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tyname in sorted(pool.by_type):
            for seq in pool.by_type[tyname]:
                fh.write(json.dumps({"type": tyname, **sequence_to_json(seq)}, sort_keys=True))
                fh.write("\n")


def load_pool(path, program: N.Program) -> ObjectPool:
    by_type: dict[str, list[CallSequence]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            by_type.setdefault(d["type"], []).append(sequence_from_json(d, program))
    return ObjectPool(by_type)


def save_sequences(seqs: list[CallSequence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            fh.write(json.dumps(sequence_to_json(seq), sort_keys=True))
            fh.write("\n")


def load_sequences(path, program: N.Program) -> list[CallSequence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(sequence_from_json(json.loads(line), program))
    return out
