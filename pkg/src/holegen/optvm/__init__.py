"""Optimizing bytecode VM with injectable optimization faults."""

from __future__ import annotations

from .analysis import FAULT_BCE, FAULT_CHAR, FAULT_FREM, FAULT_LOOPCOND, FAULT_NAMES, find_fault_triggers
from .compiler import compile_program
from .ir import BytecodeModule, disassemble, verify_module
from .vm import VM

__all__ = [
    "compile_program",
    "VM",
    "BytecodeModule",
    "disassemble",
    "verify_module",
    "find_fault_triggers",
    "FAULT_NAMES",
    "FAULT_FREM",
    "FAULT_BCE",
    "FAULT_LOOPCOND",
    "FAULT_CHAR",
]
