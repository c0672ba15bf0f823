"""Backend description documents: configuration, properties, status, defaults."""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .wire import (
    BOOL, INT, OPAQUE, REAL, STR, Date, Int, Kind, ListOf, MapOf, Model, Pair,
    ParseError, WireModel, pointer, wire,
)
from .instructions import INSTRUCTION, PULSE_ONLY_RESERVED, DiscriminatorSpec, KernelSpec

RESERVED_NAMES = frozenset({"fc", "pv", "acquire", "bfunc", "copy", "snapshot"})

INT_MATRIX = ListOf(ListOf(INT))
REAL_RANGES = ListOf(ListOf(REAL))


@dataclass(frozen=True, kw_only=True)
class GateConfig(WireModel):
    LABEL: ClassVar[str] = "gate_config"
    name: str = wire(STR)
    parameters: tuple = wire(ListOf(STR))
    coupling_map: tuple = wire(INT_MATRIX)
    qasm_def: str = wire(STR)
    conditional: bool | None = wire(BOOL, required=False)
    latency_map: tuple | None = wire(INT_MATRIX, required=False)
    description: str | None = wire(STR, required=False)


@dataclass(frozen=True, kw_only=True)
class UChannelTerm(WireModel):
    q: int = wire(INT)
    scale: object = wire(Pair())


@dataclass(frozen=True, kw_only=True)
class HamiltonianDict(WireModel):
    """The ``hamiltonian`` block: LaTeX text plus optional machine-readable terms."""

    LABEL: ClassVar[str] = "hamiltonian"
    h_latex: str = wire(STR)
    h_str: tuple | None = wire(ListOf(STR), required=False)
    vars: dict | None = wire(MapOf(REAL), required=False)
    osc: dict | None = wire(MapOf(OPAQUE), required=False)

    @property
    def terms(self) -> tuple:
        return self.h_str or ()

    @property
    def variables(self) -> dict:
        return dict(self.vars or {})

    def oscillator_levels(self) -> dict[int, int]:
        """Subsystem index to truncation, read from ``osc`` entries shaped ``{"2": 3}``."""
        out = {}
        for k, v in (self.osc or {}).items():
            if isinstance(v, int) and not isinstance(v, bool) and k.isdigit():
                out[int(k)] = v
        return out


@dataclass(frozen=True, kw_only=True)
class BackendConfiguration(WireModel):
    LABEL: ClassVar[str] = "backend configuration"
    backend_name: str = wire(STR)
    backend_version: str = wire(STR)
    n_qubits: int = wire(Int(minimum=-1))
    basis_gates: tuple = wire(ListOf(STR))
    coupling_map: tuple | None = wire(INT_MATRIX, required=False)
    gates: tuple = wire(ListOf(Model(GateConfig)))
    local: bool = wire(BOOL)
    simulator: bool = wire(BOOL)
    conditional: bool = wire(BOOL)
    configurable: bool | None = wire(BOOL, required=False)
    n_registers: int | None = wire(Int(minimum=0), required=False)
    register_map: tuple | None = wire(INT_MATRIX, required=False)
    open_pulse: bool = wire(BOOL)
    online_date: str | None = wire(Date(), required=False)
    display_name: str | None = wire(STR, required=False)
    sample_name: str | None = wire(STR, required=False)
    description: str | None = wire(STR, required=False)
    url: str | None = wire(STR, required=False)
    tags: tuple | None = wire(ListOf(STR), required=False)
    n_uchannels: int | None = wire(Int(minimum=0), required=False)
    hamiltonian: HamiltonianDict | None = wire(Model(HamiltonianDict), required=False)
    u_channel_lo: tuple | None = wire(ListOf(ListOf(Model(UChannelTerm))), required=False)
    meas_levels: tuple | None = wire(ListOf(INT), required=False)
    qubit_lo_range: tuple | None = wire(REAL_RANGES, required=False)
    meas_lo_range: tuple | None = wire(REAL_RANGES, required=False)
    dt: float | None = wire(REAL, required=False)
    dtm: float | None = wire(REAL, required=False)
    rep_times: tuple | None = wire(ListOf(REAL), required=False)
    meas_map: tuple | None = wire(INT_MATRIX, required=False)
    channel_bandwidth: tuple | None = wire(REAL_RANGES, required=False)
    meas_kernels: tuple | None = wire(ListOf(STR), required=False)
    discriminators: tuple | None = wire(ListOf(STR), required=False)
    acquisition_latency: tuple | None = wire(INT_MATRIX, required=False)
    conditional_latency: tuple | None = wire(INT_MATRIX, required=False)

    def gate(self, name: str) -> GateConfig | None:
        for g in self.gates:
            if g.name == name:
                return g
        return None

    @property
    def registers(self) -> int:
        return self.n_registers or 0


@dataclass(frozen=True, kw_only=True)
class NduvStruct(WireModel):
    LABEL: ClassVar[str] = "nduv"
    name: str = wire(STR)
    date: str = wire(Date())
    unit: str = wire(STR)
    value: float = wire(REAL)


NDUV_LIST = ListOf(Model(NduvStruct))


@dataclass(frozen=True, kw_only=True)
class GateProp(WireModel):
    LABEL: ClassVar[str] = "gate_prop"
    qubits: tuple = wire(ListOf(INT))
    gate: str = wire(STR)
    parameters: tuple = wire(NDUV_LIST)


@dataclass(frozen=True, kw_only=True)
class BackendProperties(WireModel):
    LABEL: ClassVar[str] = "backend properties"
    backend_name: str = wire(STR)
    backend_version: str = wire(STR)
    last_update_date: str = wire(Date())
    gates: tuple = wire(ListOf(Model(GateProp)))
    qubits: tuple = wire(ListOf(NDUV_LIST))
    general: tuple = wire(NDUV_LIST)


@dataclass(frozen=True, kw_only=True)
class BackendStatus(WireModel):
    LABEL: ClassVar[str] = "backend status"
    backend_name: str = wire(STR)
    backend_version: str = wire(STR)
    operational: bool = wire(BOOL)
    pending_jobs: int = wire(Int(minimum=0))
    status_msg: str = wire(STR)


@dataclass(frozen=True, kw_only=True)
class PulseLibEntry(WireModel):
    LABEL: ClassVar[str] = "pulse"
    name: str = wire(STR)
    samples: tuple = wire(ListOf(Pair()))

    def array(self) -> np.ndarray:
        return np.array([complex(s.re, s.im) for s in self.samples], dtype=complex)


PULSE_LIBRARY = ListOf(Model(PulseLibEntry))


class _Sequence(Kind):
    def parse(self, v, path, ctx):
        if not isinstance(v, list):
            raise ParseError(path, "expected array")
        return tuple(INSTRUCTION.parse(x, pointer(path, i), ctx, tokens=True) for i, x in enumerate(v))

    def dump(self, v):
        return [x.to_json() for x in v]


@dataclass(frozen=True, kw_only=True)
class CmdDefEntry(WireModel):
    """One gate-to-pulse recipe. The body is keyed ``sequence`` or ``instructions``."""

    LABEL: ClassVar[str] = "cmd_def entry"
    name: str = wire(STR)
    qubits: tuple = wire(ListOf(INT))
    sequence: tuple | None = wire(_Sequence(), required=False)
    instructions: tuple | None = wire(_Sequence(), required=False)

    @property
    def body(self) -> tuple:
        return self.sequence if self.sequence is not None else (self.instructions or ())

    def _check(self, path):
        if self.sequence is None and self.instructions is None:
            raise ParseError(pointer(path, "sequence"), "missing required field")
        for i, ins in enumerate(self.body):
            if ins.kind not in PULSE_ONLY_RESERVED and ins.kind != "pulse":
                key = "sequence" if self.sequence is not None else "instructions"
                raise ParseError(pointer(pointer(path, key), i), "cmd_def entries hold pulse commands only")


@dataclass(frozen=True, kw_only=True)
class PulseDefaults(WireModel):
    LABEL: ClassVar[str] = "backend defaults"
    qubit_freq_est: tuple = wire(ListOf(REAL))
    meas_freq_est: tuple = wire(ListOf(REAL))
    buffer: int = wire(Int(minimum=0))
    pulse_library: tuple = wire(PULSE_LIBRARY)
    cmd_def: tuple = wire(ListOf(Model(CmdDefEntry)))
    meas_kernel: KernelSpec = wire(Model(KernelSpec))
    discriminator: DiscriminatorSpec = wire(Model(DiscriminatorSpec))

    def find_cmd(self, name: str, qubits) -> CmdDefEntry | None:
        key = tuple(qubits)
        for entry in self.cmd_def:
            if entry.name == name and tuple(entry.qubits) == key:
                return entry
        return None
