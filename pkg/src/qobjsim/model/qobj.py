"""Job documents: Qobj, its layered configuration, experiments, results."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import ClassVar

from .backend import PULSE_LIBRARY
from .instructions import INSTRUCTION
from .wire import (
    BOOL, INT, OPAQUE, REAL, STR, Date, Enum, Int, Kind, ListOf, MapOf, Model,
    ParseError, WireModel, is_int, pointer, wire, HEX_RE,
)

JOB_STATES = ("ERROR", "QUEUED", "INITIALIZING", "RUNNING", "CANCELLED", "DONE")


@dataclass(frozen=True, kw_only=True)
class UserConfig(WireModel):
    LABEL: ClassVar[str] = "config"
    shots: int | None = wire(Int(minimum=1), required=False)
    memory_slots: int | None = wire(Int(minimum=0), required=False)
    seed: int | None = wire(INT, required=False)
    max_credits: int | None = wire(INT, required=False)
    meas_level: int | None = wire(Enum(0, 1, 2), required=False)
    pulse_library: tuple | None = wire(PULSE_LIBRARY, required=False)
    memory_slot_size: int | None = wire(Int(minimum=1), required=False)
    meas_return: str | None = wire(Enum("single", "avg"), required=False)
    qubit_lo_freq: tuple | None = wire(ListOf(REAL), required=False)
    meas_lo_freq: tuple | None = wire(ListOf(REAL), required=False)
    rep_time: float | None = wire(REAL, required=False)
    memory: bool | None = wire(BOOL, required=False)
    noise_model: dict | None = wire(OPAQUE, required=False)

    def merged(self, override: UserConfig | None) -> UserConfig:
        """Experiment-level keys win over job-level keys."""
        if override is None:
            return self
        changes = {}
        for f in dataclasses.fields(override):
            if "kind" in f.metadata and getattr(override, f.name) is not None:
                changes[f.name] = getattr(override, f.name)
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, kw_only=True)
class Experiment(WireModel):
    LABEL: ClassVar[str] = "experiment"
    header: dict | None = wire(OPAQUE, required=False)
    config: UserConfig | None = wire(Model(UserConfig), required=False)
    instructions: tuple = wire(ListOf(INSTRUCTION))


@dataclass(frozen=True, kw_only=True)
class Qobj(WireModel):
    LABEL: ClassVar[str] = "qobj"
    qobj_id: str = wire(STR)
    type: str = wire(Enum("QASM", "PULSE"))
    schema_version: str = wire(STR)
    experiments: tuple = wire(ListOf(Model(Experiment)))
    header: dict | None = wire(OPAQUE, required=False)
    config: UserConfig = wire(Model(UserConfig))

    def _check(self, path):
        for key in ("shots", "memory_slots"):
            if getattr(self.config, key) is None:
                raise ParseError(pointer(pointer(path, "config"), key), "missing required field")

    def experiment_config(self, index: int) -> UserConfig:
        return self.config.merged(self.experiments[index].config)

    def config_path(self, index: int, key: str) -> str:
        """Pointer to where the effective value of ``key`` for experiment ``index`` came from."""
        exp = self.experiments[index]
        if exp.config is not None and getattr(exp.config, key, None) is not None:
            return f"/experiments/{index}/config/{key}"
        return f"/config/{key}"


class Shots(Kind):
    """``shots`` is either a count or an ``[n1, n2]`` window of a chunked result."""

    def parse(self, v, path, ctx):
        if is_int(v) and v >= 0:
            return v
        if isinstance(v, list) and len(v) == 2 and all(is_int(x) and x >= 0 for x in v) and v[0] <= v[1]:
            return tuple(v)
        raise ParseError(path, "expected shot count or [n1, n2] window")

    def dump(self, v):
        return list(v) if isinstance(v, tuple) else v


@dataclass(frozen=True, kw_only=True)
class ExpData(WireModel):
    LABEL: ClassVar[str] = "data"
    counts: dict | None = wire(MapOf(INT), required=False)
    memory: list | None = wire(OPAQUE, required=False)
    statevector: list | None = wire(OPAQUE, required=False)
    unitary: list | None = wire(OPAQUE, required=False)
    snapshots: dict | None = wire(MapOf(MapOf(OPAQUE)), required=False)

    def _check(self, path):
        for k, n in (self.counts or {}).items():
            if not HEX_RE.match(k):
                raise ParseError(pointer(pointer(path, "counts"), k), "counts keys must be hex strings")
            if n < 0:
                raise ParseError(pointer(pointer(path, "counts"), k), "negative count")


@dataclass(frozen=True, kw_only=True)
class ExperimentResult(WireModel):
    LABEL: ClassVar[str] = "experiment result"
    shots: int | tuple = wire(Shots())
    status: str = wire(STR)
    success: bool = wire(BOOL)
    header: dict | None = wire(OPAQUE, required=False)
    seed: int | None = wire(INT, required=False)
    meas_return: str | None = wire(Enum("single", "avg"), required=False)
    data: ExpData = wire(Model(ExpData))

    @property
    def shot_count(self) -> int:
        if isinstance(self.shots, tuple):
            n1, n2 = self.shots
            return n2 - n1 if n1 == 0 else n2 - n1 + 1
        return self.shots


@dataclass(frozen=True, kw_only=True)
class ResultDocument(WireModel):
    LABEL: ClassVar[str] = "result"
    backend_name: str = wire(STR)
    backend_version: str = wire(STR)
    qobj_id: str = wire(STR)
    job_id: str = wire(STR)
    date: str | None = wire(Date(), required=False)
    header: dict | None = wire(OPAQUE, required=False)
    status: str | None = wire(STR, required=False)
    success: bool = wire(BOOL)
    results: tuple = wire(ListOf(Model(ExperimentResult)))


@dataclass(frozen=True, kw_only=True)
class JobStatus(WireModel):
    LABEL: ClassVar[str] = "job status"
    job_id: str = wire(STR)
    status: str = wire(Enum(*JOB_STATES))
    status_msg: str = wire(STR)
