"""Structural checks that run after parsing and before execution.

Every check reports into a :class:`ValidationReport` instead of raising. Paths
are JSON pointers into the document that was parsed, and each one names a node
that exists there.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .backend import RESERVED_NAMES, BackendConfiguration, BackendProperties, PulseDefaults
from .instructions import (
    Acquire, Barrier, Bfunc, Copy, DrivePulse, FrameChange, Gate, Measure,
    PersistentValue, Reset, Snapshot, has_tokens,
)
from .qobj import Qobj, ResultDocument, UserConfig

CHANNEL_RE = re.compile(r"^([dmu])(\d+)$")
SAMPLE_TOL = 1e-12


@dataclass(frozen=True)
class Violation:
    path: str
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.severity}: {self.path or '/'}: {self.message}"


class ValidationReport(list):
    """A list of :class:`Violation`; executable when it holds no errors."""

    def add(self, path: str, message: str, severity: str = "error"):
        self.append(Violation(path, message, severity))

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self):
        return [{"path": v.path, "message": v.message, "severity": v.severity} for v in self]


def check_pulse_library(lib, path: str, report: ValidationReport):
    seen = set()
    for i, entry in enumerate(lib or ()):
        p = f"{path}/{i}"
        if entry.name in RESERVED_NAMES:
            report.add(f"{p}/name", f"'{entry.name}' is a reserved name")
        if entry.name in seen:
            report.add(f"{p}/name", f"duplicate pulse name '{entry.name}'", "warning")
        seen.add(entry.name)
        if not entry.samples:
            report.add(f"{p}/samples", "pulse has no samples")
        for k, s in enumerate(entry.samples):
            if math.hypot(s.re, s.im) > 1 + SAMPLE_TOL:
                report.add(f"{p}/samples/{k}", "sample magnitude > 1")


def channel_limit(cfg: BackendConfiguration, prefix: str) -> int:
    if prefix == "u":
        return cfg.n_uchannels or 0
    return cfg.n_qubits if cfg.n_qubits >= 0 else 1 << 30


def check_channel(ch: str, cfg: BackendConfiguration | None, path: str, report: ValidationReport):
    m = CHANNEL_RE.match(ch)
    if not m:
        report.add(path, f"channel '{ch}' does not match d<k>|m<k>|u<k>")
    elif cfg is not None and int(m.group(2)) >= channel_limit(cfg, m.group(1)):
        report.add(path, f"channel '{ch}' is not configured on this backend")


def check_ranges(pairs, path: str, report: ValidationReport):
    for i, pair in enumerate(pairs or ()):
        if len(pair) != 2:
            report.add(f"{path}/{i}", "expected [low, high]")
        elif pair[0] > pair[1]:
            report.add(f"{path}/{i}", "low exceeds high")


def validate_backend(cfg: BackendConfiguration, defaults: PulseDefaults | None = None,
                     properties: BackendProperties | None = None) -> ValidationReport:
    """Configuration invariants, plus defaults/properties against it when given."""
    from ..hamiltonian.dsl import DslError, parse_term
    from ..qasm.qasmdef import DefError, parse_qasm_def

    report = ValidationReport()
    nq = cfg.n_qubits
    names = [g.name for g in cfg.gates]
    for i, b in enumerate(cfg.basis_gates):
        if b not in names:
            report.add(f"/basis_gates/{i}", f"basis gate '{b}' has no gate configuration")
    for i, g in enumerate(cfg.gates):
        p = f"/gates/{i}"
        if g.name not in cfg.basis_gates:
            report.add(f"{p}/name", f"gate '{g.name}' is not listed in basis_gates")
        arities = {len(c) for c in g.coupling_map}
        if len(arities) > 1:
            report.add(f"{p}/coupling_map", "entries have mixed arity")
        for k, c in enumerate(g.coupling_map):
            if nq >= 0 and any(q < 0 or q >= nq for q in c):
                report.add(f"{p}/coupling_map/{k}", "qubit index out of range")
        if g.latency_map is not None and cfg.n_registers is not None:
            for k, row in enumerate(g.latency_map):
                if len(row) != cfg.n_registers:
                    report.add(f"{p}/latency_map/{k}", "row length must equal n_registers")
        try:
            parse_qasm_def(g.qasm_def)
        except DefError as e:
            report.add(f"{p}/qasm_def", str(e))
    for i, pair in enumerate(cfg.coupling_map or ()):
        if len(pair) != 2:
            report.add(f"/coupling_map/{i}", "expected a qubit pair")
        elif nq >= 0 and any(q < 0 or q >= nq for q in pair):
            report.add(f"/coupling_map/{i}", "qubit index out of range")
    if cfg.conditional:
        if cfg.n_registers is None:
            report.add("/conditional", "conditional backends must declare n_registers")
        if cfg.register_map is None:
            report.add("/conditional", "conditional backends must declare register_map")
        elif cfg.n_registers is not None:
            if nq >= 0 and len(cfg.register_map) != nq:
                report.add("/register_map", "needs one row per qubit")
            for k, row in enumerate(cfg.register_map):
                if len(row) != cfg.n_registers:
                    report.add(f"/register_map/{k}", "row length must equal n_registers")
                elif any(x not in (0, 1) for x in row):
                    report.add(f"/register_map/{k}", "entries must be 0 or 1")
    if cfg.open_pulse:
        _check_pulse_configuration(cfg, report, DslError, parse_term)
    if defaults is not None:
        report.extend(validate_defaults(defaults, cfg))
    if properties is not None:
        report.extend(validate_properties(properties, cfg))
    return report


def _check_pulse_configuration(cfg, report, DslError, parse_term):
    nq = cfg.n_qubits
    for key in ("n_uchannels", "meas_levels", "qubit_lo_range", "meas_lo_range", "dt", "dtm",
                "rep_times", "meas_map"):
        if getattr(cfg, key) is None:
            report.add("/open_pulse", f"pulse backends must declare {key}")
    n_u = cfg.n_uchannels or 0
    ulo = cfg.u_channel_lo
    if ulo is not None:
        if len(ulo) == 0 and n_u > 0:
            report.add("/u_channel_lo", "empty: U channels run at baseband with no LO mixing", "warning")
        elif len(ulo) != n_u:
            report.add("/u_channel_lo", "length must equal n_uchannels")
        for i, terms in enumerate(ulo):
            for k, t in enumerate(terms):
                if t.q < 0 or (nq >= 0 and t.q >= nq):
                    report.add(f"/u_channel_lo/{i}/{k}/q", "qubit index out of range")
    for i, lvl in enumerate(cfg.meas_levels or ()):
        if lvl not in (0, 1, 2):
            report.add(f"/meas_levels/{i}", "measurement level must be 0, 1 or 2")
    seen = set()
    for i, group in enumerate(cfg.meas_map or ()):
        for k, q in enumerate(group):
            if q in seen:
                report.add(f"/meas_map/{i}/{k}", "meas_map groups must be disjoint")
            if q < 0 or (nq >= 0 and q >= nq):
                report.add(f"/meas_map/{i}/{k}", "qubit index out of range")
            seen.add(q)
    for key in ("qubit_lo_range", "meas_lo_range", "channel_bandwidth"):
        check_ranges(getattr(cfg, key), f"/{key}", report)
    if cfg.hamiltonian is not None:
        for i, term in enumerate(cfg.hamiltonian.terms):
            try:
                parse_term(term)
            except DslError as e:
                report.add(f"/hamiltonian/h_str/{i}", str(e))


def validate_defaults(defaults: PulseDefaults, cfg: BackendConfiguration | None = None) -> ValidationReport:
    report = ValidationReport()
    check_pulse_library(defaults.pulse_library, "/pulse_library", report)
    if cfg is not None and cfg.n_qubits >= 0:
        if len(defaults.qubit_freq_est) != cfg.n_qubits:
            report.add("/qubit_freq_est", "length must equal n_qubits")
        if len(defaults.meas_freq_est) != cfg.n_qubits:
            report.add("/meas_freq_est", "length must equal n_qubits")
    lib = {e.name for e in defaults.pulse_library}
    for i, entry in enumerate(defaults.cmd_def):
        key = "sequence" if entry.sequence is not None else "instructions"
        for k, ins in enumerate(entry.body):
            p = f"/cmd_def/{i}/{key}/{k}"
            if isinstance(ins, DrivePulse) and ins.name not in lib:
                report.add(f"{p}/name", f"pulse '{ins.name}' is not in the default library", "warning")
            if hasattr(ins, "ch"):
                check_channel(ins.ch, cfg, f"{p}/ch", report)
    return report


def validate_properties(props: BackendProperties, cfg: BackendConfiguration) -> ValidationReport:
    report = ValidationReport()
    for i, g in enumerate(props.gates):
        if g.gate not in cfg.basis_gates:
            report.add(f"/gates/{i}/gate", f"'{g.gate}' is not a basis gate of {cfg.backend_name}")
    return report


def validate_qobj(q: Qobj, cfg: BackendConfiguration, defaults: PulseDefaults | None = None,
                  strict: bool = False) -> ValidationReport:
    report = ValidationReport()
    if q.type == "PULSE" and not cfg.open_pulse:
        report.add("/type", f"backend {cfg.backend_name} does not accept OpenPulse experiments")
        return report
    if q.config.pulse_library is not None:
        check_pulse_library(q.config.pulse_library, "/config/pulse_library", report)
    for i, exp in enumerate(q.experiments):
        c = q.experiment_config(i)
        if exp.config is not None and exp.config.pulse_library is not None:
            check_pulse_library(exp.config.pulse_library, f"/experiments/{i}/config/pulse_library", report)
        if q.type == "QASM":
            _check_qasm_experiment(q, i, c, cfg, report)
        else:
            _check_pulse_experiment(q, i, c, cfg, defaults, report, strict)
    return report


def _qubits_in_range(ins, cfg, path, report):
    for k, qb in enumerate(ins.qubits or ()):
        if qb < 0 or (cfg.n_qubits >= 0 and qb >= cfg.n_qubits):
            report.add(f"{path}/qubits/{k}", "qubit index out of range")
    if len(set(ins.qubits or ())) != len(ins.qubits or ()):
        report.add(f"{path}/qubits", "repeated qubit")


def _conditional(ins, cfg, path, report):
    if ins.conditional is None:
        return
    if not cfg.conditional:
        report.add(f"{path}/conditional", "backend does not support conditional operations")
    elif ins.conditional >= cfg.registers:
        report.add(f"{path}/conditional", "register index out of range")


def _check_qasm_experiment(q, i, c: UserConfig, cfg: BackendConfiguration, report):
    slots = c.memory_slots or 0
    regs = cfg.registers
    check_map = cfg.acquisition_latency is None and cfg.register_map is not None
    for j, ins in enumerate(q.experiments[i].instructions):
        p = f"/experiments/{i}/instructions/{j}"
        if isinstance(ins, (DrivePulse, FrameChange, PersistentValue, Acquire)):
            report.add(f"{p}/name", f"'{ins.name}' is a pulse command, illegal in a QASM experiment")
            continue
        if isinstance(ins, Gate):
            _qubits_in_range(ins, cfg, p, report)
            _conditional(ins, cfg, p, report)
            g = cfg.gate(ins.name)
            if g is None:
                if ins.name not in ("U", "CX") or not cfg.simulator:
                    report.add(f"{p}/name", f"gate '{ins.name}' is not offered by {cfg.backend_name}")
                continue
            nparams = len(ins.params or ())
            if nparams != len(g.parameters):
                path = f"{p}/params" if ins.params is not None else f"{p}/name"
                report.add(path, f"'{ins.name}' takes {len(g.parameters)} parameters, got {nparams}")
            if g.coupling_map and list(ins.qubits) not in [list(x) for x in g.coupling_map]:
                report.add(f"{p}/qubits", f"'{ins.name}' is not available on qubits {list(ins.qubits)}")
            if ins.conditional is not None and g.conditional is False:
                report.add(f"{p}/conditional", f"'{ins.name}' cannot be conditioned on this backend")
        elif isinstance(ins, Measure):
            _qubits_in_range(ins, cfg, p, report)
            for k, m in enumerate(ins.memory):
                if m >= slots:
                    report.add(f"{p}/memory/{k}", "memory slot out of range")
            for k, r in enumerate(ins.register or ()):
                if not cfg.conditional:
                    report.add(f"{p}/register/{k}", "backend has no registers")
                elif r >= regs:
                    report.add(f"{p}/register/{k}", "register index out of range")
                elif check_map and ins.qubits[k] < len(cfg.register_map) and not cfg.register_map[ins.qubits[k]][r]:
                    report.add(f"{p}/register/{k}", f"qubit {ins.qubits[k]} cannot store into register {r}")
        elif isinstance(ins, (Reset, Barrier)):
            _qubits_in_range(ins, cfg, p, report)
        elif isinstance(ins, Bfunc):
            if not cfg.conditional:
                report.add(f"{p}/name", "backend has no registers for bfunc")
            elif ins.register >= regs:
                report.add(f"{p}/register", "register index out of range")
            if ins.memory is not None and ins.memory >= slots:
                report.add(f"{p}/memory", "memory slot out of range")
        elif isinstance(ins, Copy):
            if ins.register_orig >= regs:
                report.add(f"{p}/register_orig", "register index out of range")
            for k, r in enumerate(ins.register_copy):
                if r >= regs:
                    report.add(f"{p}/register_copy/{k}", "register index out of range")
        elif isinstance(ins, Snapshot):
            _snapshot(ins, p, report)


def _snapshot(ins, p, report):
    if ins.type != "state":
        report.add(f"{p}/type", f"snapshot type '{ins.type}' is not supported")


def effective_library(c: UserConfig, defaults: PulseDefaults | None) -> dict:
    """Default pulses overlaid by user pulses of the same name."""
    lib = {e.name: e for e in (defaults.pulse_library if defaults else ())}
    lib.update({e.name: e for e in (c.pulse_library or ())})
    return lib


def _check_pulse_experiment(q, i, c: UserConfig, cfg, defaults, report, strict):
    level = 2 if c.meas_level is None else c.meas_level
    if cfg.meas_levels is not None and level not in cfg.meas_levels:
        report.add(q.config_path(i, "meas_level"), f"meas_level {level} not offered; choose from {list(cfg.meas_levels)}")
    if level == 2 and c.meas_return == "avg":
        report.add(q.config_path(i, "meas_return"), "meas_return must be 'single' at meas_level 2")
    if level == 0 and c.meas_return == "single":
        report.add(q.config_path(i, "meas_return"), "level-0 data is meant for averaging mode", "warning")
    if c.rep_time is not None and cfg.rep_times is not None and c.rep_time not in cfg.rep_times:
        report.add(q.config_path(i, "rep_time"), "rep_time is not one of the backend rep_times")
    for key, rkey in (("qubit_lo_freq", "qubit_lo_range"), ("meas_lo_freq", "meas_lo_range")):
        freqs, ranges = getattr(c, key), getattr(cfg, rkey) or ()
        for k, f in enumerate(freqs or ()):
            path = f"{q.config_path(i, key)}/{k}"
            if k >= len(ranges):
                report.add(path, f"no {rkey} entry to check against", "warning")
            elif not ranges[k][0] <= f <= ranges[k][1]:
                report.add(path, f"{f} GHz lies outside {list(ranges[k])}")
    lib = effective_library(c, defaults)
    slots = c.memory_slots or 0
    groups = [set(g) for g in cfg.meas_map or ()]
    busy: dict[str, list] = {}
    for j, ins in enumerate(q.experiments[i].instructions):
        p = f"/experiments/{i}/instructions/{j}"
        if isinstance(ins, (Gate, Measure, Reset, Barrier, Bfunc, Copy)):
            report.add(f"{p}/name", f"'{ins.name}' is illegal in a PULSE experiment")
            continue
        if has_tokens(ins):
            report.add(p, "unresolved parameter token")
        if isinstance(ins, Snapshot):
            _snapshot(ins, p, report)
            continue
        if hasattr(ins, "ch"):
            check_channel(ins.ch, cfg, f"{p}/ch", report)
        if hasattr(ins, "conditional"):
            _conditional(ins, cfg, p, report)
        if isinstance(ins, DrivePulse):
            if ins.name not in lib:
                report.add(f"{p}/name", f"pulse '{ins.name}' is in neither the job nor the backend library")
                continue
            end = ins.t0 + len(lib[ins.name].samples)
            for (s, e, k) in busy.get(ins.ch, ()):
                if ins.t0 < e and s < end:
                    report.add(f"{p}/t0", f"overlaps pulse at instruction {k} on {ins.ch}")
            busy.setdefault(ins.ch, []).append((ins.t0, end, j))
        elif isinstance(ins, PersistentValue):
            if not has_tokens(ins) and abs(ins.val.value) > 1 + SAMPLE_TOL:
                report.add(f"{p}/val", "persistent value magnitude > 1")
        elif isinstance(ins, Acquire):
            _check_acquire(ins, p, cfg, level, slots, groups, report, strict)


def _check_acquire(ins, p, cfg, level, slots, groups, report, strict):
    if ins.qubits is None or ins.memory_slot is None:
        report.add(p, "acquire needs qubits and memory_slot")
        return
    _qubits_in_range(ins, cfg, p, report)
    for k, m in enumerate(ins.memory_slot):
        if m >= slots:
            report.add(f"{p}/memory_slot/{k}", "memory slot out of range")
    if ins.register_slot is not None:
        if not cfg.conditional or level != 2:
            report.add(f"{p}/register_slot", "register writes need a conditional backend at meas_level 2")
        elif len(ins.register_slot) != len(ins.qubits):
            report.add(f"{p}/register_slot", "length must equal qubits")
        else:
            for k, r in enumerate(ins.register_slot):
                if r >= cfg.registers:
                    report.add(f"{p}/register_slot/{k}", "register index out of range")
    for key, allowed in (("kernels", cfg.meas_kernels), ("discriminators", cfg.discriminators)):
        for k, spec in enumerate(getattr(ins, key) or ()):
            if allowed is not None and spec.name not in allowed:
                report.add(f"{p}/{key}/{k}/name", f"'{spec.name}' is not offered by this backend")
    chosen = set(ins.qubits)
    for g in groups:
        if chosen & g and not g <= chosen:
            report.add(f"{p}/qubits", f"acquire splits meas_map group {sorted(g)}",
                       "error" if strict else "warning")


def memory_shape(level: int, meas_return: str, shots: int, slots: int, size: int | None) -> tuple:
    """Expected array shape of ``data.memory`` for pulse measurement levels 0 and 1."""
    if level == 0:
        return (slots, size, 2) if meas_return == "avg" else (shots, slots, size, 2)
    return (slots, 2) if meas_return == "avg" else (shots, slots, 2)


def validate_result(res: ResultDocument, qobj: Qobj | None = None) -> ValidationReport:
    report = ValidationReport()
    if qobj is not None and len(res.results) != len(qobj.experiments):
        report.add("/results", f"expected {len(qobj.experiments)} experiment results")
    for i, r in enumerate(res.results):
        p = f"/results/{i}"
        shots = r.shot_count
        if r.data.counts is not None and sum(r.data.counts.values()) > shots:
            report.add(f"{p}/data/counts", "counts exceed shots")
        if qobj is None or i >= len(qobj.experiments) or r.data.memory is None:
            continue
        c = qobj.experiment_config(i)
        level = 2 if qobj.type == "QASM" or c.meas_level is None else c.meas_level
        if level == 2:
            mem = r.data.memory
            if not all(isinstance(x, str) for x in mem):
                report.add(f"{p}/data/memory", "level-2 memory holds hex strings")
            elif len(mem) > shots:
                report.add(f"{p}/data/memory", "more memory entries than shots")
            continue
        want = memory_shape(level, r.meas_return or c.meas_return or "avg", shots,
                            c.memory_slots or 0, c.memory_slot_size)
        try:
            got = np.asarray(r.data.memory, dtype=float).shape
        except ValueError:
            got = None
        if got != want:
            report.add(f"{p}/data/memory", f"shape {got} does not match expected {want}")
    return report
