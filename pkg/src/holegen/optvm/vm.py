"""Executor for compiled bytecode modules.

Mirrors the reference interpreter's runtime contract: same value model, same
trap kinds, same budget accounting, so checksum harnesses can drive either
engine interchangeably. Unchecked array instructions (emitted only by faulty
bounds-check elimination) read the element default / drop the store instead
of trapping, deterministically.
"""

from __future__ import annotations

from ..errors import (
    INDEX_OUT_OF_BOUNDS,
    LIMIT_DEPTH,
    NULL_DEREF,
    UNFILLED_HOLE,
    InternalCompileError,
    LimitExceeded,
    Trap,
)
from ..interp import Budget, Exhausted, Outcome, Returned, Trapped, _entropy_seed, _ddiv
from ..lang import values as V
from .ir import BytecodeModule, IRFunction

_UNDEF = object()


class VM:
    """One execution session over a compiled module."""

    def __init__(self, module: BytecodeModule, tick_seed: int | None = None, debug: bool = False):
        self.m = module
        self.debug = debug
        self._tick = V.wrap32(tick_seed if tick_seed is not None else _entropy_seed())

    def init_globals(self, budget: Budget) -> dict:
        state: dict[str, object] = {}
        for name, _tag, init in self.m.global_inits:
            state[name] = self._run(init, [], state, budget)
        return state

    def call(self, state: dict, key: str, args: list, budget: Budget) -> object:
        fn = self.m.functions.get(key)
        if fn is None:
            raise InternalCompileError(f"no compiled function {key}")
        return self._run(fn, list(args), state, budget)

    def call_outcome(self, state: dict, key: str, args: list, budget: Budget) -> Outcome:
        try:
            return Returned(self.call(state, key, args, budget))
        except Trap as t:
            return Trapped(t.kind, t.hole_id)
        except LimitExceeded as l:
            return Exhausted(l.which)

    def _ticks(self) -> int:
        self._tick = V.wrap32(self._tick * 1103515245 + 12345)
        return self._tick

    def _run(self, fn: IRFunction, args: list, state: dict, budget: Budget) -> object:
        budget.depth += 1
        if budget.depth > budget.max_depth:
            budget.depth -= 1
            raise LimitExceeded(LIMIT_DEPTH)
        regs: list = [_UNDEF] * fn.nregs
        for i, a in enumerate(args):
            regs[i] = a
        code = fn.code
        n = len(code)
        records = self.m.records
        pc = 0
        try:
            while pc < n:
                budget.step()
                ins = code[pc]
                op = ins[0]
                if op == "const":
                    regs[ins[1]] = ins[2]
                elif op == "mov":
                    regs[ins[1]] = regs[ins[2]]
                elif op == "iadd":
                    regs[ins[1]] = V.wrap32(regs[ins[2]] + regs[ins[3]])
                elif op == "isub":
                    regs[ins[1]] = V.wrap32(regs[ins[2]] - regs[ins[3]])
                elif op == "imul":
                    regs[ins[1]] = V.wrap32(regs[ins[2]] * regs[ins[3]])
                elif op == "idiv":
                    regs[ins[1]] = V.int_div(regs[ins[2]], regs[ins[3]])
                elif op == "irem":
                    regs[ins[1]] = V.int_rem(regs[ins[2]], regs[ins[3]])
                elif op == "ishl":
                    regs[ins[1]] = V.int_shl(regs[ins[2]], regs[ins[3]])
                elif op == "ishr":
                    regs[ins[1]] = V.int_shr(regs[ins[2]], regs[ins[3]])
                elif op == "iushr":
                    regs[ins[1]] = V.int_ushr(regs[ins[2]], regs[ins[3]])
                elif op == "dadd":
                    regs[ins[1]] = regs[ins[2]] + regs[ins[3]]
                elif op == "dsub":
                    regs[ins[1]] = regs[ins[2]] - regs[ins[3]]
                elif op == "dmul":
                    regs[ins[1]] = regs[ins[2]] * regs[ins[3]]
                elif op == "ddiv":
                    regs[ins[1]] = _ddiv(regs[ins[2]], regs[ins[3]])
                elif op == "drem":
                    regs[ins[1]] = V.dbl_rem(regs[ins[2]], regs[ins[3]])
                elif op == "ineg":
                    regs[ins[1]] = V.wrap32(-regs[ins[2]])
                elif op == "dneg":
                    regs[ins[1]] = -regs[ins[2]]
                elif op == "bnot":
                    regs[ins[1]] = not regs[ins[2]]
                elif op == "icmp" or op == "dcmp":
                    l = regs[ins[3]]
                    r = regs[ins[4]]
                    o = ins[2]
                    if o == "<":
                        regs[ins[1]] = l < r
                    elif o == "<=":
                        regs[ins[1]] = l <= r
                    elif o == ">":
                        regs[ins[1]] = l > r
                    elif o == ">=":
                        regs[ins[1]] = l >= r
                    elif o == "==":
                        regs[ins[1]] = l == r
                    else:
                        regs[ins[1]] = l != r
                elif op == "acmp":
                    l = regs[ins[3]]
                    r = regs[ins[4]]
                    regs[ins[1]] = (l is r) if ins[2] == "==" else (l is not r)
                elif op == "c2i":
                    regs[ins[1]] = regs[ins[2]]
                elif op == "c2i_s":
                    v = regs[ins[2]]
                    regs[ins[1]] = v - 0x10000 if v >= 0x8000 else v
                elif op == "i2c":
                    regs[ins[1]] = V.i2c(regs[ins[2]])
                elif op == "i2d":
                    regs[ins[1]] = float(regs[ins[2]])
                elif op == "d2i":
                    regs[ins[1]] = V.d2i(regs[ins[2]])
                elif op == "newarr":
                    regs[ins[1]] = V.new_array(ins[2], regs[ins[3]], budget)
                elif op == "alen":
                    regs[ins[1]] = len(regs[ins[2]].items)
                elif op == "aload":
                    items = regs[ins[2]].items
                    idx = regs[ins[3]]
                    if idx < 0 or idx >= len(items):
                        raise Trap(INDEX_OUT_OF_BOUNDS)
                    regs[ins[1]] = items[idx]
                elif op == "aload_nc":
                    arr = regs[ins[2]]
                    items = arr.items
                    idx = regs[ins[3]]
                    if 0 <= idx < len(items):
                        regs[ins[1]] = items[idx]
                    else:
                        regs[ins[1]] = V.elem_default(arr.elem)
                elif op == "astore":
                    items = regs[ins[1]].items
                    idx = regs[ins[2]]
                    if idx < 0 or idx >= len(items):
                        raise Trap(INDEX_OUT_OF_BOUNDS)
                    items[idx] = regs[ins[3]]
                elif op == "astore_nc":
                    items = regs[ins[1]].items
                    idx = regs[ins[2]]
                    if 0 <= idx < len(items):
                        items[idx] = regs[ins[3]]
                elif op == "newrec":
                    decl = records[ins[2]]
                    budget.alloc(len(decl.fields) + 1)
                    values = {}
                    for f, r in zip(decl.fields, ins[3]):
                        values[f.name] = regs[r]
                    regs[ins[1]] = V.RecordV(decl, values)
                elif op == "getf":
                    obj = regs[ins[2]]
                    if obj is None:
                        raise Trap(NULL_DEREF)
                    regs[ins[1]] = obj.values[ins[3]]
                elif op == "setf":
                    obj = regs[ins[1]]
                    if obj is None:
                        raise Trap(NULL_DEREF)
                    obj.values[ins[2]] = regs[ins[3]]
                elif op == "call":
                    callee = self.m.functions[ins[2]]
                    call_args = [regs[r] for r in ins[3]]
                    regs[ins[1]] = self._run(callee, call_args, state, budget)
                elif op == "nullck":
                    if regs[ins[1]] is None:
                        raise Trap(NULL_DEREF)
                elif op == "gload":
                    regs[ins[1]] = state[ins[2]]
                elif op == "gstore":
                    state[ins[1]] = regs[ins[2]]
                elif op == "ticks":
                    regs[ins[1]] = self._ticks()
                elif op == "unfilled":
                    raise Trap(UNFILLED_HOLE, ins[1])
                elif op == "jmp":
                    pc = ins[1]
                    continue
                elif op == "jz":
                    if not regs[ins[1]]:
                        pc = ins[2]
                        continue
                elif op == "jnz":
                    if regs[ins[1]]:
                        pc = ins[2]
                        continue
                elif op == "ret":
                    v = regs[ins[1]]
                    if self.debug and v is _UNDEF:
                        raise InternalCompileError(f"{fn.key}: returning undefined register")
                    return v
                elif op == "retu":
                    return V.UNIT
                elif op == "nop":
                    pass
                else:
                    raise InternalCompileError(f"unknown opcode {op}")
                pc += 1
            return V.UNIT
        finally:
            budget.depth -= 1
