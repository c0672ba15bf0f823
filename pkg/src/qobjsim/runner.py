"""Execute a parsed Qobj on a backend bundle and assemble the result document."""

from __future__ import annotations

import secrets
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .hamiltonian import evaluate_backend, u_channel_frequency
from .lowering import lower_qobj
from .model.instructions import Acquire
from .model.qobj import ExpData, ExperimentResult, Qobj, ResultDocument
from .model.validate import effective_library
from .pulse import PulseSettings, RotatingModel, run_pulse_experiment
from .qasm import backend_defs
from .qasm.engine import BitFlipNoise, experiment_width, pairs, run_experiment
from .registry import Backend

DATE_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class EngineMismatch(ValueError):
    pass


@dataclass
class RunOutput:
    """The result document plus one per-shot memory list per experiment."""

    document: ResultDocument
    shot_memory: list = field(default_factory=list)


def now_iso() -> str:
    return datetime.now(timezone.utc).strftime(DATE_FORMAT)


def pick_seed(explicit: int | None, configured: int | None) -> int:
    if explicit is not None:
        return explicit
    if configured is not None:
        return configured
    return secrets.randbelow(2**31)


def run_qobj(qobj: Qobj, backend: Backend, *, seed: int | None = None, job_id: str | None = None,
             date: str | None = None, stop=None) -> RunOutput:
    if qobj.type == "PULSE" and not backend.configuration.open_pulse:
        raise EngineMismatch(f"backend {backend.name} does not accept PULSE experiments")
    if backend.engine == "pulse":
        if qobj.type == "QASM":
            if backend.defaults is None:
                raise EngineMismatch(f"backend {backend.name} has no cmd_def to lower QASM with")
            qobj = lower_qobj(qobj, backend.defaults, backend.configuration)
        runs = _run_pulse(qobj, backend, seed, stop)
    else:
        runs = _run_qasm(qobj, backend, seed, stop)
    doc = ResultDocument(
        backend_name=backend.configuration.backend_name,
        backend_version=backend.configuration.backend_version,
        qobj_id=qobj.qobj_id,
        job_id=job_id or uuid.uuid4().hex,
        date=date or now_iso(),
        header=qobj.header if qobj.header is not None else {},
        status="COMPLETED",
        success=True,
        results=tuple(r for r, _ in runs),
    )
    return RunOutput(doc, [m for _, m in runs])


def _result(exp, c, seed, data, meas_return=None) -> ExperimentResult:
    return ExperimentResult(shots=c.shots, status="DONE", success=True,
                            header=exp.header if exp.header is not None else {}, seed=seed,
                            meas_return=meas_return, data=data)


def _run_qasm(qobj: Qobj, backend: Backend, seed, stop) -> list:
    cfg = backend.configuration
    defs = backend_defs(cfg)
    out = []
    for i, exp in enumerate(qobj.experiments):
        c = qobj.experiment_config(i)
        c = c.replace(shots=c.shots or 1024)
        used = pick_seed(seed, c.seed)
        outcome = run_experiment(
            exp, n_qubits=experiment_width(exp.instructions), shots=c.shots,
            memory_slots=c.memory_slots or 0, n_registers=cfg.n_registers or 0, seed=used, exp_index=i,
            defs=defs, conditional=bool(cfg.conditional), noise=BitFlipNoise.from_config(c.noise_model),
            stop=stop)
        data = ExpData(
            counts=outcome.counts,
            memory=None if c.memory is False else outcome.memory,
            statevector=pairs(outcome.statevector) if c.shots == 1 and outcome.statevector is not None else None,
            snapshots=outcome.snapshots or None,
        )
        out.append((_result(exp, c, used, data), outcome.memory))
    return out


def lo_map(backend: Backend, c, channels) -> dict:
    """LO frequency (GHz) of every d/m/u channel the model drives."""
    defaults = backend.defaults
    qubit_lo = list(c.qubit_lo_freq or (defaults.qubit_freq_est if defaults else ()))
    meas_lo = list(c.meas_lo_freq or (defaults.meas_freq_est if defaults else ()))
    u_specs = backend.configuration.u_channel_lo or ()
    out = {}
    for ch in channels:
        k = int(ch[1:])
        if ch[0] == "d" and k < len(qubit_lo):
            out[ch] = qubit_lo[k]
        elif ch[0] == "m" and k < len(meas_lo):
            out[ch] = meas_lo[k]
        elif ch[0] == "u" and k < len(u_specs):
            out[ch] = u_channel_frequency(u_specs[k], qubit_lo)
    return out


def _run_pulse(qobj: Qobj, backend: Backend, seed, stop) -> list:
    cfg = backend.configuration
    sim = backend.simulator
    ham = evaluate_backend(cfg, sim.get("oscillator_levels", 3))
    models: dict = {}
    out = []
    for i, exp in enumerate(qobj.experiments):
        c = qobj.experiment_config(i)
        c = c.replace(shots=c.shots or 1024)
        level = 2 if c.meas_level is None else c.meas_level
        meas_return = c.meas_return or ("avg" if level == 0 else "single")
        lo = lo_map(backend, c, ham.drives)
        key = tuple(sorted(lo.items()))
        if key not in models:
            models[key] = RotatingModel(ham, lo, sim.get("drive_scale", 1.0), cfg.dt, sim.get("substeps", 1))
        acquires = [ins for ins in exp.instructions if isinstance(ins, Acquire)]
        slots = c.memory_slots
        if slots is None:
            slots = max((s + 1 for a in acquires for s in a.memory_slot or ()), default=0)
        size = c.memory_slot_size
        if level == 0 and size is None:
            size = max((max(1, round(a.duration * cfg.dt / cfg.dtm)) for a in acquires), default=1)
        regs = cfg.n_registers or max((r + 1 for a in acquires for r in a.register_slot or ()), default=0)
        defaults = backend.defaults
        settings = PulseSettings(
            model=models[key],
            library={name: e.array() for name, e in effective_library(c, defaults).items()},
            dt=cfg.dt, dtm=cfg.dtm, meas_level=level, meas_return=meas_return, memory_slots=slots,
            memory_slot_size=size, n_registers=regs, meas_noise_sigma=sim.get("meas_noise_sigma", 0.0),
        )
        if defaults is not None:
            settings.default_kernel = (defaults.meas_kernel.name, tuple(defaults.meas_kernel.params))
            settings.default_discriminator = (defaults.discriminator.name, tuple(defaults.discriminator.params))
        used = pick_seed(seed, c.seed)
        o = run_pulse_experiment(exp.instructions, settings, shots=c.shots, seed=used, exp_index=i, stop=stop)
        if level == 2:
            data = ExpData(counts=o.counts, memory=None if c.memory is False else o.memory,
                           snapshots=o.snapshots or None)
            out.append((_result(exp, c, used, data), o.shot_memory))
        else:
            data = ExpData(memory=o.memory, snapshots=o.snapshots or None)
            out.append((_result(exp, c, used, data, meas_return), o.shot_memory))
    return out
