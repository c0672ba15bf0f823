"""Compile QASM experiments into PULSE experiments through a backend's cmd_def.

Each command starts at t=0 of its own sequence. Commands are placed ASAP: a
command starts at the latest clock among the channels it touches, and those
clocks then move to the command end plus the backend buffer. A command on
qubit q also owns d<q>, m<q> and the acquisition slot of q, so measurements
and later gates on the same qubit stay ordered.
"""

from __future__ import annotations

from .model.backend import BackendConfiguration, CmdDefEntry, PulseDefaults
from .model.instructions import (
    Acquire, Barrier, Bfunc, Copy, DrivePulse, FrameChange, Gate, Measure, PersistentValue, Reset,
    Snapshot, token_index,
)
from .model.qobj import Experiment, Qobj
from .model.validate import effective_library
from .model.wire import ComplexPair


class LoweringError(ValueError):
    pass


class MissingParameter(LoweringError):
    pass


class MissingCmdDef(LoweringError):
    pass


class ConditionalOnUnsupportedChannel(LoweringError):
    pass


class UnsupportedInstruction(LoweringError):
    pass


def _actual(value, actuals):
    if not isinstance(value, str):
        return value
    k, sign = token_index(value)
    if k >= len(actuals):
        raise MissingParameter(f"token {value!r} needs parameter {k}, only {len(actuals)} given")
    return sign * float(actuals[k])


def substitute_params(entry: CmdDefEntry, actuals) -> list:
    """The entry body with every ``Pk`` token replaced by ``actuals[k]``."""
    out = []
    for ins in entry.body:
        if isinstance(ins, FrameChange):
            ins = ins.replace(phase=_actual(ins.phase, actuals))
        elif isinstance(ins, PersistentValue):
            val = ComplexPair(_actual(ins.val.re, actuals), _actual(ins.val.im, actuals))
            ins = ins.replace(val=val)
        out.append(ins)
    return out


def _length(ins, library: dict) -> int:
    if isinstance(ins, Acquire):
        return ins.duration
    if isinstance(ins, DrivePulse):
        entry = library.get(ins.name)
        return len(entry.samples) if entry is not None else 0
    return 0


class LoweringContext:
    """Per-experiment scheduling state; build one per experiment."""

    def __init__(self, defaults: PulseDefaults, library: dict, cfg: BackendConfiguration | None = None):
        self.defaults = defaults
        self.library = library
        self.buffer = defaults.buffer
        self.cfg = cfg
        self.clock: dict[str, int] = {}

    def qubit_channels(self, q: int) -> set:
        chans = {f"d{q}", f"m{q}", f"acquire{q}"}
        for k, terms in enumerate(getattr(self.cfg, "u_channel_lo", None) or ()):
            if any(t.q == q for t in terms):
                chans.add(f"u{k}")
        return chans

    def start(self, channels) -> int:
        return max((self.clock.get(ch, 0) for ch in channels), default=0)

    def place(self, entry: CmdDefEntry, qubits, actuals, conditional=None) -> list:
        body = substitute_params(entry, actuals)
        footprint = set()
        for q in qubits:
            footprint |= {f"d{q}", f"m{q}", f"acquire{q}"}
        for ins in body:
            if isinstance(ins, Acquire):
                footprint |= {f"acquire{q}" for q in ins.qubits or qubits}
            else:
                footprint.add(ins.ch)
        t = self.start(footprint)
        end = max((ins.t0 + _length(ins, self.library) for ins in body), default=0)
        placed = []
        for ins in body:
            ins = ins.replace(t0=ins.t0 + t)
            if conditional is not None:
                if isinstance(ins, Acquire):
                    raise ConditionalOnUnsupportedChannel(f"{entry.name} on {list(qubits)} contains an acquire")
                ins = ins.replace(conditional=conditional)
            placed.append(ins)
        for ch in footprint:
            self.clock[ch] = t + end + self.buffer
        return placed

    def barrier(self, qubits):
        chans = set()
        for q in qubits:
            chans |= self.qubit_channels(q)
        t = self.start(chans)
        for ch in chans:
            self.clock[ch] = t


def _measure(ctx: LoweringContext, ins: Measure) -> list:
    entry = ctx.defaults.find_cmd("measure", ins.qubits)
    if entry is not None:
        groups = [(tuple(ins.qubits), tuple(ins.memory), ins.register)]
    else:
        groups = [((q,), (m,), (ins.register[k],) if ins.register is not None else None)
                  for k, (q, m) in enumerate(zip(ins.qubits, ins.memory))]
        for qs, _, _ in groups:
            if ctx.defaults.find_cmd("measure", qs) is None:
                raise MissingCmdDef(f"no cmd_def for measure on {list(qs)}")
        ctx.barrier(ins.qubits)
    out = []
    for qs, mem, reg in groups:
        placed = ctx.place(ctx.defaults.find_cmd("measure", qs), qs, ())
        for p in placed:
            if isinstance(p, Acquire):
                p = p.replace(qubits=qs, memory_slot=mem, register_slot=reg)
            out.append(p)
    return out


def lower_experiment(exp: Experiment, defaults: PulseDefaults, library: dict,
                     cfg: BackendConfiguration | None = None) -> Experiment:
    ctx = LoweringContext(defaults, library, cfg)
    out = []
    for j, ins in enumerate(exp.instructions):
        if isinstance(ins, Gate):
            entry = defaults.find_cmd(ins.name, ins.qubits)
            if entry is None:
                raise MissingCmdDef(f"instruction {j}: no cmd_def for {ins.name} on {list(ins.qubits)}")
            out.extend(ctx.place(entry, ins.qubits, ins.params or (), ins.conditional))
        elif isinstance(ins, Measure):
            out.extend(_measure(ctx, ins))
        elif isinstance(ins, Barrier):
            ctx.barrier(ins.qubits)
        elif isinstance(ins, Snapshot):
            out.append(ins.replace(t0=max(ctx.clock.values(), default=0)))
        elif isinstance(ins, (Bfunc, Copy, Reset)):
            raise UnsupportedInstruction(f"instruction {j}: {ins.name} has no pulse form")
        else:
            raise UnsupportedInstruction(f"instruction {j}: {ins.name} is not a QASM command")
    out = [ins for _, ins in sorted(enumerate(out), key=lambda p: (p[1].t0, p[0]))]
    return exp.replace(instructions=tuple(out))


def lower_qobj(qobj: Qobj, defaults: PulseDefaults, cfg: BackendConfiguration | None = None) -> Qobj:
    if qobj.type == "PULSE":
        return qobj
    experiments = []
    for i, exp in enumerate(qobj.experiments):
        library = effective_library(qobj.experiment_config(i), defaults)
        experiments.append(lower_experiment(exp, defaults, library, cfg))
    config = qobj.config
    if config.meas_level is None:
        config = config.replace(meas_level=2)
    if config.meas_return is None:
        config = config.replace(meas_return="single")
    return qobj.replace(type="PULSE", experiments=tuple(experiments), config=config)
