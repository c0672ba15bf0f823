"""Sequence commands for QASM and PULSE experiments.

Reserved names select a variant directly. Any other name is a gate in a QASM
experiment, or a drive pulse when the command carries ``t0``/``ch``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

from .wire import (
    INT, REAL, STR, Enum, Hex, Int, Kind, ListOf, Model, Pair, ParseError,
    RealOrToken, TOKEN_RE, WireModel, pointer, wire,
)

QASM_RESERVED = frozenset({"bfunc", "copy", "barrier", "reset", "measure", "snapshot"})
PULSE_ONLY_RESERVED = frozenset({"fc", "pv", "acquire"})
INTS = ListOf(INT)
T0 = Int(minimum=0)


@dataclass(frozen=True, kw_only=True)
class KernelSpec(WireModel):
    LABEL: ClassVar[str] = "kernel"
    name: str = wire(STR)
    params: tuple = wire(ListOf(REAL))


@dataclass(frozen=True, kw_only=True)
class DiscriminatorSpec(WireModel):
    LABEL: ClassVar[str] = "discriminator"
    name: str = wire(STR)
    params: tuple = wire(ListOf(REAL))


@dataclass(frozen=True, kw_only=True)
class Instruction(WireModel):
    LABEL: ClassVar[str] = "instruction"
    kind: ClassVar[str] = ""
    name: str = wire(STR)

    @property
    def qubit_list(self) -> tuple:
        return tuple(getattr(self, "qubits", None) or ())


@dataclass(frozen=True, kw_only=True)
class Bfunc(Instruction):
    kind: ClassVar[str] = "bfunc"
    mask: str = wire(Hex())
    relation: str = wire(Enum("==", "!="))
    val: str = wire(Hex())
    register: int = wire(Int(minimum=0))
    memory: int | None = wire(Int(minimum=0), required=False)
    register_listed: bool = False

    @classmethod
    def from_json(cls, obj, path="", ctx=None):
        reg = obj.get("register") if isinstance(obj, dict) else None
        if isinstance(reg, list):
            if len(reg) != 1:
                raise ParseError(pointer(path, "register"), "bfunc writes exactly one register")
            inst = super().from_json({**obj, "register": reg[0]}, path, ctx)
            return inst.replace(register_listed=True)
        return super().from_json(obj, path, ctx)

    def to_json(self):
        out = super().to_json()
        if self.register_listed:
            out["register"] = [self.register]
        return out

    def evaluate(self, register_value: int) -> bool:
        masked = register_value & int(self.mask, 16)
        target = int(self.val, 16)
        return masked == target if self.relation == "==" else masked != target


@dataclass(frozen=True, kw_only=True)
class Copy(Instruction):
    kind: ClassVar[str] = "copy"
    register_orig: int = wire(Int(minimum=0))
    register_copy: tuple = wire(INTS)


@dataclass(frozen=True, kw_only=True)
class Gate(Instruction):
    kind: ClassVar[str] = "gate"
    qubits: tuple = wire(INTS)
    params: tuple | None = wire(ListOf(REAL), required=False)
    texparams: tuple | None = wire(ListOf(STR), required=False)
    conditional: int | None = wire(Int(minimum=0), required=False)


@dataclass(frozen=True, kw_only=True)
class Barrier(Instruction):
    kind: ClassVar[str] = "barrier"
    qubits: tuple = wire(INTS)


@dataclass(frozen=True, kw_only=True)
class Reset(Instruction):
    kind: ClassVar[str] = "reset"
    qubits: tuple = wire(INTS)


@dataclass(frozen=True, kw_only=True)
class Measure(Instruction):
    kind: ClassVar[str] = "measure"
    qubits: tuple = wire(INTS)
    memory: tuple = wire(INTS)
    register: tuple | None = wire(INTS, required=False)

    def _check(self, path):
        if len(self.memory) != len(self.qubits):
            raise ParseError(pointer(path, "memory"), "length must equal qubits")
        if self.register is not None and len(self.register) != len(self.qubits):
            raise ParseError(pointer(path, "register"), "length must equal qubits")


@dataclass(frozen=True, kw_only=True)
class Snapshot(Instruction):
    kind: ClassVar[str] = "snapshot"
    label: str = wire(STR)
    type: str = wire(STR)
    t0: int | None = wire(T0, required=False)


@dataclass(frozen=True, kw_only=True)
class DrivePulse(Instruction):
    kind: ClassVar[str] = "pulse"
    t0: int = wire(T0)
    ch: str = wire(STR)
    conditional: int | None = wire(Int(minimum=0), required=False)


@dataclass(frozen=True, kw_only=True)
class FrameChange(Instruction):
    kind: ClassVar[str] = "fc"
    t0: int = wire(T0)
    ch: str = wire(STR)
    phase: float | str = wire(RealOrToken())
    conditional: int | None = wire(Int(minimum=0), required=False)


@dataclass(frozen=True, kw_only=True)
class PersistentValue(Instruction):
    kind: ClassVar[str] = "pv"
    t0: int = wire(T0)
    ch: str = wire(STR)
    val: object = wire(Pair(tokens=True))
    conditional: int | None = wire(Int(minimum=0), required=False)


@dataclass(frozen=True, kw_only=True)
class Acquire(Instruction):
    """``qubits`` and ``memory_slot`` may be absent only inside a cmd_def measure."""

    kind: ClassVar[str] = "acquire"
    t0: int = wire(T0)
    duration: int = wire(Int(minimum=1))
    qubits: tuple | None = wire(INTS, required=False)
    memory_slot: tuple | None = wire(INTS, required=False)
    register_slot: tuple | None = wire(INTS, required=False)
    kernels: tuple | None = wire(ListOf(Model(KernelSpec)), required=False)
    discriminators: tuple | None = wire(ListOf(Model(DiscriminatorSpec)), required=False)

    def _check(self, path):
        if self.qubits is not None and self.memory_slot is not None and len(self.memory_slot) != len(self.qubits):
            raise ParseError(pointer(path, "memory_slot"), "length must equal qubits")


VARIANTS = {
    "bfunc": Bfunc, "copy": Copy, "barrier": Barrier, "reset": Reset, "measure": Measure,
    "snapshot": Snapshot, "fc": FrameChange, "pv": PersistentValue, "acquire": Acquire,
}


def has_tokens(ins: Instruction) -> bool:
    if isinstance(ins, FrameChange):
        return isinstance(ins.phase, str)
    if isinstance(ins, PersistentValue):
        return isinstance(ins.val.re, str) or isinstance(ins.val.im, str)
    return False


class _InstructionKind(Kind):
    def parse(self, v, path, ctx, tokens: bool = False):
        if not isinstance(v, dict):
            raise ParseError(path, "expected instruction object")
        name = v.get("name")
        if not isinstance(name, str):
            raise ParseError(pointer(path, "name"), "missing required field" if name is None else "expected string")
        if name in VARIANTS:
            cls = VARIANTS[name]
        elif "ch" in v or "t0" in v:
            cls = DrivePulse
        else:
            cls = Gate
        ins = cls.from_json(v, path, ctx)
        if not tokens and has_tokens(ins):
            raise ParseError(path, "parameter tokens are only allowed inside cmd_def")
        return ins

    def dump(self, v):
        return v.to_json()


INSTRUCTION = _InstructionKind()


def parse_instruction(obj, path: str = "", ctx=None, tokens: bool = False) -> Instruction:
    return INSTRUCTION.parse(obj, path, ctx, tokens=tokens)


def token_index(tok: str) -> tuple[int, int]:
    """``"p2"`` gives ``(2, +1)``; ``"-P0"`` gives ``(0, -1)``."""
    m = TOKEN_RE.match(tok)
    return int(m.group(1)), (-1 if tok.startswith("-") else 1)

