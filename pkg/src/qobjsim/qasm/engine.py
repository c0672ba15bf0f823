"""Statevector execution of QASM experiments with the memory/register machine.

The state is an ndarray of shape ``(2,) * n`` whose axis ``n - 1 - q`` holds
qubit ``q``, so a C-order flatten puts qubit 0 in the least-significant bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import Cancelled
from ..model.hexbits import encode_hex
from ..model.instructions import Barrier, Bfunc, Copy, Gate, Measure, Reset, Snapshot
from .gates import ArityMismatch, embed, gate_arity, gate_matrix

log = logging.getLogger(__name__)


class ConditionalUnsupported(ValueError):
    pass


class RegisterOutOfRange(IndexError):
    pass


class NonUnitaryInstruction(ValueError):
    pass


@dataclass(frozen=True)
class BitFlipNoise:
    """X with probability ``p`` on each noisy qubit at each noise point.

    With ``after`` unset, every gate is a noise point for the qubits it touches.
    Otherwise the points are the listed instruction indices, acting on ``qubits``
    (all qubits when unset).
    """

    p: float
    qubits: tuple | None = None
    after: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("bit-flip probability must lie in [0, 1]")

    @classmethod
    def from_config(cls, cfg: dict | None) -> BitFlipNoise | None:
        if not cfg:
            return None
        if cfg.get("type") != "bit_flip":
            raise ValueError(f"unsupported noise model {cfg.get('type')!r}")
        after = cfg.get("after")
        if isinstance(after, int):
            after = (after,)
        qubits = cfg.get("qubits")
        return cls(float(cfg["p"]), tuple(qubits) if qubits is not None else None,
                   tuple(after) if after is not None else None)

    def targets(self, index: int, ins, n_qubits: int) -> tuple:
        if self.after is None:
            if not isinstance(ins, Gate):
                return ()
            return tuple(q for q in ins.qubits if self.qubits is None or q in self.qubits)
        if index not in self.after:
            return ()
        return self.qubits if self.qubits is not None else tuple(range(n_qubits))


@dataclass
class ExperimentOutcome:
    counts: dict
    memory: list
    snapshots: dict = field(default_factory=dict)
    statevector: np.ndarray | None = None
    warnings: list = field(default_factory=list)


def shot_rng(seed: int, exp_index: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, exp_index, shot]))


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    return psi


def apply_matrix(psi: np.ndarray, u: np.ndarray, qubits) -> np.ndarray:
    n, k = psi.ndim, len(qubits)
    axes = [n - 1 - q for q in reversed(qubits)]
    out = np.tensordot(u.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def flip(psi: np.ndarray, q: int) -> np.ndarray:
    return np.flip(psi, axis=psi.ndim - 1 - q)


def measure_qubit(psi: np.ndarray, q: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    axis = psi.ndim - 1 - q
    p1 = float(np.sum(np.abs(np.take(psi, 1, axis=axis)) ** 2))
    bit = int(rng.random() < p1)
    keep = np.zeros(2)
    keep[bit] = 1.0
    shape = [1] * psi.ndim
    shape[axis] = 2
    psi = psi * keep.reshape(shape)
    norm = np.sqrt(p1 if bit else 1.0 - p1)
    return psi / norm, bit


def flat(psi: np.ndarray) -> np.ndarray:
    return psi.reshape(-1).copy()


def pairs(vec: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in vec]


def experiment_width(instructions) -> int:
    used = [q for ins in instructions for q in ins.qubit_list]
    return max(used) + 1 if used else 0


def _check_classical(instructions, n_registers: int, conditional: bool):
    for j, ins in enumerate(instructions):
        regs = []
        cond = getattr(ins, "conditional", None)
        if cond is not None:
            if not conditional:
                raise ConditionalUnsupported(f"instruction {j}: backend has no conditional support")
            regs.append(cond)
        if isinstance(ins, Measure):
            regs.extend(ins.register or ())
        elif isinstance(ins, Bfunc):
            regs.append(ins.register)
        elif isinstance(ins, Copy):
            regs.extend((ins.register_orig, *ins.register_copy))
        for r in regs:
            if r >= n_registers:
                raise RegisterOutOfRange(f"instruction {j}: register {r} with {n_registers} registers")


class _Shot:
    """Mutable per-shot machine state."""

    def __init__(self, psi, memory_slots, n_registers):
        self.psi = psi
        self.memory = [0] * memory_slots
        self.registers = [0] * n_registers

    def register_value(self) -> int:
        return sum(b << k for k, b in enumerate(self.registers))


def run_experiment(exp, *, n_qubits: int, shots: int, memory_slots: int, n_registers: int = 0,
                   seed: int = 0, exp_index: int = 0, defs: dict | None = None,
                   conditional: bool = True, noise: BitFlipNoise | None = None,
                   stop=None) -> ExperimentOutcome:
    instructions = exp.instructions
    defs = defs or {}
    _check_classical(instructions, n_registers, conditional)
    cache: dict = {}

    def matrix(ins):
        key = (ins.name, tuple(ins.params or ()))
        if key not in cache:
            width = gate_arity(ins.name, defs)[1]
            if width != len(ins.qubits):
                raise ArityMismatch(f"{ins.name} acts on {width} qubits, got {len(ins.qubits)}")
            cache[key] = gate_matrix(ins.name, ins.params or (), defs)
        return cache[key]

    def noisy(j, ins):
        return noise is not None and noise.p > 0 and bool(noise.targets(j, ins, n_qubits))

    # longest prefix that is identical on every shot
    split = len(instructions)
    for j, ins in enumerate(instructions):
        if isinstance(ins, (Measure, Reset, Bfunc, Copy)) or getattr(ins, "conditional", None) is not None or noisy(j, ins):
            split = j
            break

    snapshots: dict = {}
    warnings: list = []

    def snapshot(ins, psi, shot):
        if shot != 0:
            return
        if ins.type != "state":
            raise ValueError(f"snapshot type {ins.type!r} is not supported")
        snapshots.setdefault(ins.type, {})[ins.label] = pairs(flat(psi))

    prefix = zero_state(n_qubits)
    for ins in instructions[:split]:
        if isinstance(ins, Gate):
            prefix = apply_matrix(prefix, matrix(ins), ins.qubits)
        elif isinstance(ins, Snapshot):
            snapshot(ins, prefix, 0)

    if shots > 1 and any(isinstance(i, Snapshot) for i in instructions):
        warnings.append(f"snapshots record shot 0 only ({shots} shots requested)")
        log.warning(warnings[-1])

    memories = []
    final = None
    for shot in range(shots):
        if stop is not None and stop():
            raise Cancelled(f"stopped before shot {shot}")
        rng = shot_rng(seed, exp_index, shot)
        st = _Shot(prefix, memory_slots, n_registers)
        for j in range(split, len(instructions)):
            ins = instructions[j]
            if isinstance(ins, Gate):
                if ins.conditional is None or st.registers[ins.conditional]:
                    st.psi = apply_matrix(st.psi, matrix(ins), ins.qubits)
            elif isinstance(ins, Measure):
                for k, q in enumerate(ins.qubits):
                    st.psi, bit = measure_qubit(st.psi, q, rng)
                    st.memory[ins.memory[k]] = bit
                    if ins.register is not None:
                        st.registers[ins.register[k]] = bit
            elif isinstance(ins, Reset):
                for q in ins.qubits:
                    st.psi, bit = measure_qubit(st.psi, q, rng)
                    if bit:
                        st.psi = flip(st.psi, q)
            elif isinstance(ins, Bfunc):
                bit = int(ins.evaluate(st.register_value()))
                st.registers[ins.register] = bit
                if ins.memory is not None:
                    st.memory[ins.memory] = bit
            elif isinstance(ins, Copy):
                bit = st.registers[ins.register_orig]
                for r in ins.register_copy:
                    st.registers[r] = bit
            elif isinstance(ins, Snapshot):
                snapshot(ins, st.psi, shot)
            elif not isinstance(ins, Barrier):
                raise NonUnitaryInstruction(f"instruction {j} ({ins.name}) is not a QASM command")
            if noise is not None and noise.p > 0:
                for q in noise.targets(j, ins, n_qubits):
                    if rng.random() < noise.p:
                        st.psi = flip(st.psi, q)
        memories.append(encode_hex(st.memory) if memory_slots else "0x0")
        if shot == 0:
            final = st.psi
    counts: dict = {}
    for key in sorted(set(memories), key=lambda h: int(h, 16)):
        counts[key] = memories.count(key)
    return ExperimentOutcome(counts, memories, snapshots, flat(final) if final is not None else None, warnings)


def run_unitary(exp, n_qubits: int, defs: dict | None = None) -> np.ndarray:
    """Circuit unitary on ``n_qubits``; only gates, barriers and snapshots are allowed."""
    defs = defs or {}
    total = np.eye(1 << n_qubits, dtype=complex)
    for j, ins in enumerate(exp.instructions):
        if isinstance(ins, Gate) and ins.conditional is None:
            u = gate_matrix(ins.name, ins.params or (), defs)
            total = embed(u, list(ins.qubits), n_qubits) @ total
        elif not isinstance(ins, (Barrier, Snapshot)):
            raise NonUnitaryInstruction(f"instruction {j} ({ins.name}) has no unitary")
    return total
