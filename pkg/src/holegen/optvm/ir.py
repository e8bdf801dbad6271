"""Register bytecode: instruction model, module container, verifier, disasm.

Instructions are tuples with the opcode first. Registers are per-function
virtual registers; arguments arrive in registers 0..nparams-1 (receiver
first). Jumps carry absolute instruction indices after label resolution.

Opcodes:
    const d v            | mov d s
    iadd/isub/imul/idiv/irem d a b      32-bit wrapping; div/rem trap on 0
    ishl/ishr/iushr d a b               shift count masked to 5 bits
    dadd/dsub/dmul/ddiv/drem d a b      IEEE doubles, Java-style remainder
    ineg/dneg/bnot d a
    icmp/dcmp d op a b                  op in < <= > >= == !=
    acmp d op a b                       reference identity, op in == !=
    c2i d a / c2i_s d a                 char widening: zero- / sign-extend
    i2c d a | i2d d a | d2i d a
    newarr d elem len | alen d a
    aload d arr idx | aload_nc d arr idx
    astore arr idx v | astore_nc arr idx v
    newrec d name (args) | getf d obj f | setf obj f v
    call d key (args)
    gload d name | gstore name s
    ticks d | unfilled hole_id
    jmp L | jz c L | jnz c L
    ret s | retu
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InternalCompileError
from ..lang import nodes as N

# opcode -> indices of source-register operands / destination register index
_BIN = {"iadd", "isub", "imul", "idiv", "irem", "ishl", "ishr", "iushr",
        "dadd", "dsub", "dmul", "ddiv", "drem"}
_UN = {"mov", "ineg", "dneg", "bnot", "c2i", "c2i_s", "i2c", "i2d", "d2i", "alen"}


def instr_uses(ins: tuple) -> list[int]:
    op = ins[0]
    if op in _BIN:
        return [ins[2], ins[3]]
    if op in _UN:
        return [ins[2]]
    if op in ("icmp", "dcmp", "acmp"):
        return [ins[3], ins[4]]
    if op == "newarr":
        return [ins[3]]
    if op in ("aload", "aload_nc"):
        return [ins[2], ins[3]]
    if op in ("astore", "astore_nc"):
        return [ins[1], ins[2], ins[3]]
    if op == "newrec" or op == "call":
        return list(ins[3])
    if op == "getf":
        return [ins[2]]
    if op == "setf":
        return [ins[1], ins[3]]
    if op == "gstore":
        return [ins[2]]
    if op in ("jz", "jnz"):
        return [ins[1]]
    if op == "ret":
        return [ins[1]]
    if op == "nullck":
        return [ins[1]]
    return []


def instr_def(ins: tuple) -> int | None:
    op = ins[0]
    if op in _BIN or op in _UN or op in (
        "const",
        "icmp",
        "dcmp",
        "acmp",
        "newarr",
        "aload",
        "aload_nc",
        "newrec",
        "getf",
        "call",
        "gload",
        "ticks",
    ):
        return ins[1]
    return None


# Instructions whose removal is unobservable when the result is dead.
PURE_OPS = {
    "const", "mov", "iadd", "isub", "imul", "ishl", "ishr", "iushr",
    "dadd", "dsub", "dmul", "ddiv", "drem", "ineg", "dneg", "bnot",
    "icmp", "dcmp", "acmp", "c2i", "c2i_s", "i2c", "i2d", "d2i",
    "alen", "gload",
}

_TERMINATORS = {"jmp", "ret", "retu"}


@dataclass
class IRFunction:
    key: str
    nparams: int
    nregs: int
    code: list[tuple]
    spans: list[tuple]  # (line, col) per instruction
    ret_tag: str
    param_tags: tuple[str, ...] = ()


@dataclass
class BytecodeModule:
    unit: str
    level: str
    faults: frozenset[str]
    functions: dict[str, IRFunction]
    global_inits: list[tuple[str, str, IRFunction]]  # (name, type tag, initializer)
    records: dict[str, N.RecordDecl] = field(default_factory=dict)


def block_leaders(code: list[tuple]) -> list[int]:
    leaders = {0}
    for i, ins in enumerate(code):
        op = ins[0]
        if op == "jmp":
            leaders.add(ins[1])
            leaders.add(i + 1)
        elif op in ("jz", "jnz"):
            leaders.add(ins[2])
            leaders.add(i + 1)
        elif op in ("ret", "retu"):
            leaders.add(i + 1)
    return sorted(l for l in leaders if l < len(code))


def verify_function(fn: IRFunction) -> None:
    """Check jump targets and that every register is defined before use on
    all paths from entry. Raises InternalCompileError on violation."""
    code = fn.code
    n = len(code)
    if n == 0 or code[-1][0] not in _TERMINATORS:
        raise InternalCompileError(f"{fn.key}: missing terminator")
    for ins in code:
        if ins[0] == "jmp" and not (0 <= ins[1] < n):
            raise InternalCompileError(f"{fn.key}: jump target {ins[1]} out of range")
        if ins[0] in ("jz", "jnz") and not (0 <= ins[2] < n):
            raise InternalCompileError(f"{fn.key}: branch target {ins[2]} out of range")
        d = instr_def(ins)
        if d is not None and not (0 <= d < fn.nregs):
            raise InternalCompileError(f"{fn.key}: register r{d} out of range")
        for u in instr_uses(ins):
            if not (0 <= u < fn.nregs):
                raise InternalCompileError(f"{fn.key}: register r{u} out of range")

    leaders = block_leaders(code)
    starts = {l: bi for bi, l in enumerate(leaders)}
    blocks: list[tuple[int, int]] = []
    for bi, l in enumerate(leaders):
        end = leaders[bi + 1] if bi + 1 < len(leaders) else n
        blocks.append((l, end))

    succs: list[list[int]] = [[] for _ in blocks]
    for bi, (lo, hi) in enumerate(blocks):
        last = code[hi - 1]
        op = last[0]
        if op == "jmp":
            succs[bi].append(starts[last[1]])
        elif op in ("jz", "jnz"):
            succs[bi].append(starts[last[2]])
            if hi < n:
                succs[bi].append(starts[hi])
        elif op not in ("ret", "retu"):
            if hi < n:
                succs[bi].append(starts[hi])

    all_regs = frozenset(range(fn.nregs))
    params = frozenset(range(fn.nparams))
    ins_sets: list[frozenset[int]] = [all_regs] * len(blocks)
    ins_sets[0] = params
    preds: list[list[int]] = [[] for _ in blocks]
    for bi, ss in enumerate(succs):
        for s in ss:
            preds[s].append(bi)

    def block_defs(bi: int) -> frozenset[int]:
        lo, hi = blocks[bi]
        defs = set()
        for i in range(lo, hi):
            d = instr_def(code[i])
            if d is not None:
                defs.add(d)
        return frozenset(defs)

    defs = [block_defs(bi) for bi in range(len(blocks))]
    changed = True
    while changed:
        changed = False
        for bi in range(len(blocks)):
            if bi == 0:
                inn = params
            else:
                inn = all_regs
                for p in preds[bi]:
                    inn = inn & (ins_sets[p] | defs[p])
                if not preds[bi]:
                    inn = all_regs  # unreachable; skip checking below
            if inn != ins_sets[bi]:
                ins_sets[bi] = inn
                changed = True

    reachable = {0}
    work = [0]
    while work:
        bi = work.pop()
        for s in succs[bi]:
            if s not in reachable:
                reachable.add(s)
                work.append(s)

    for bi in sorted(reachable):
        lo, hi = blocks[bi]
        defined = set(ins_sets[bi])
        for i in range(lo, hi):
            for u in instr_uses(code[i]):
                if u not in defined:
                    raise InternalCompileError(
                        f"{fn.key}: r{u} used before definition at {i}: {code[i]}"
                    )
            d = instr_def(code[i])
            if d is not None:
                defined.add(d)


def verify_module(m: BytecodeModule) -> None:
    for fn in m.functions.values():
        verify_function(fn)
    for _, _, fn in m.global_inits:
        verify_function(fn)


def disassemble(m: BytecodeModule) -> str:
    lines = [f"; unit {m.unit} level {m.level} faults {sorted(m.faults) or '-'}"]
    for name, tag, fn in m.global_inits:
        lines.append(f"global {name}: {tag}")
        lines += _disasm_fn(fn)
    for key in sorted(m.functions):
        fn = m.functions[key]
        lines.append(f"fn {key} params={fn.nparams} regs={fn.nregs}")
        lines += _disasm_fn(fn)
    return "\n".join(lines) + "\n"


def _disasm_fn(fn: IRFunction) -> list[str]:
    out = []
    for i, ins in enumerate(fn.code):
        parts = []
        for p in ins[1:]:
            if isinstance(p, tuple):
                parts.append("(" + ", ".join(f"r{x}" for x in p) + ")")
            else:
                parts.append(str(p))
        out.append(f"  {i:4d}  {ins[0]:<9s} {' '.join(parts)}")
    return out
