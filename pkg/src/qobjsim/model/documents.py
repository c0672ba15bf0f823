"""Parse any supported document by kind name, or guess the kind from its keys."""

from __future__ import annotations

from .backend import (
    NDUV_LIST, PULSE_LIBRARY, BackendConfiguration, BackendProperties, BackendStatus,
    CmdDefEntry, GateConfig, GateProp, HamiltonianDict, NduvStruct, PulseDefaults, PulseLibEntry,
)
from .instructions import INSTRUCTION, DiscriminatorSpec, KernelSpec
from .qobj import ExpData, Experiment, ExperimentResult, JobStatus, Qobj, ResultDocument, UserConfig
from .wire import MapOf, Model, OPAQUE, ListOf, ParseContext, ParseError, WireModel

KINDS = {
    "backend_configuration": Model(BackendConfiguration),
    "gate_config": Model(GateConfig),
    "backend_properties": Model(BackendProperties),
    "nduv": Model(NduvStruct),
    "nduv_list": NDUV_LIST,
    "gate_prop": Model(GateProp),
    "backend_status": Model(BackendStatus),
    "backend_defaults": Model(PulseDefaults),
    "pulse_library": PULSE_LIBRARY,
    "pulse": Model(PulseLibEntry),
    "cmd_def": ListOf(Model(CmdDefEntry)),
    "cmd_def_entry": Model(CmdDefEntry),
    "kernel": Model(KernelSpec),
    "discriminator": Model(DiscriminatorSpec),
    "hamiltonian": Model(HamiltonianDict),
    "user_config": Model(UserConfig),
    "experiment": Model(Experiment),
    "experiment_list": ListOf(Model(Experiment)),
    "instruction": INSTRUCTION,
    "instruction_list": ListOf(INSTRUCTION),
    "qobj": Model(Qobj),
    "job_status": Model(JobStatus),
    "result": Model(ResultDocument),
    "experiment_result": Model(ExperimentResult),
    "exp_data": Model(ExpData),
    "snapshots": MapOf(MapOf(OPAQUE)),
}

# Ordered: the first key set fully present in a document decides its kind.
_SIGNATURES = (
    ("qobj", {"qobj_id", "type", "experiments"}),
    ("result", {"results", "job_id"}),
    ("backend_configuration", {"backend_name", "basis_gates", "n_qubits"}),
    ("backend_properties", {"last_update_date", "qubits", "general"}),
    ("backend_status", {"operational", "pending_jobs"}),
    ("backend_defaults", {"qubit_freq_est", "cmd_def"}),
    ("job_status", {"job_id", "status", "status_msg"}),
    ("experiment_result", {"shots", "success", "data"}),
    ("experiment", {"instructions"}),
)


def detect_kind(obj) -> str:
    if isinstance(obj, dict):
        for kind, keys in _SIGNATURES:
            if keys <= obj.keys():
                return kind
    raise ParseError("", "cannot tell what kind of document this is")


def parse_document(kind: str, obj, strict: bool = False, ctx: ParseContext | None = None):
    if kind not in KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    ctx = ctx or ParseContext(strict=strict)
    return KINDS[kind].parse(obj, "", ctx)


def dump_document(kind: str, value):
    return KINDS[kind].dump(value)


def parse_qobj(data: bytes | str | dict, strict: bool = False) -> Qobj:
    from .wire import loads
    obj = loads(data) if isinstance(data, (bytes, str)) else data
    return parse_document("qobj", obj, strict)
