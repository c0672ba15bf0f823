"""Shot loop for PULSE experiments.

Evolution between acquisitions depends only on the measurement history, so
states are memoized on a tree keyed by (projective outcome, registers) and
each shot walks it with its own RNG. At a time step, acquisitions happen
first; events starting at that step are then resolved against the updated
registers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import Cancelled
from ..model.hexbits import encode_hex
from .measure import (
    RegisterWriteWithoutLevel2, apply_kernel, assemble_memory, discriminate, readout_signal,
)
from .propagate import RotatingModel
from .timeline import build_timelines

PROB_FLOOR = 1e-15


@dataclass
class PulseSettings:
    """Everything the engine needs besides the instruction list."""

    model: RotatingModel
    library: dict
    dt: float
    dtm: float
    meas_level: int = 2
    meas_return: str = "single"
    memory_slots: int = 0
    memory_slot_size: int | None = None
    n_registers: int = 0
    meas_noise_sigma: float = 0.0
    default_kernel: tuple = ("boxcar", ())
    default_discriminator: tuple = ("max_1Q_fidelity", ())


@dataclass
class PulseOutcome:
    memory: list | None
    counts: dict | None
    shot_memory: list
    final_state: np.ndarray
    frame_phases: dict
    snapshots: dict = field(default_factory=dict)


class _Pre:
    """State at time ``t`` before the acquisitions at ``t``."""

    __slots__ = ("t", "psi", "regs", "decisions", "dist", "children")

    def __init__(self, t, psi, regs, decisions):
        self.t, self.psi, self.regs, self.decisions = t, psi, regs, decisions
        self.dist = None
        self.children = {}


class _Post:
    __slots__ = ("t", "psi", "regs", "decisions", "next")

    def __init__(self, t, psi, regs, decisions):
        self.t, self.psi, self.regs, self.decisions = t, psi, regs, decisions
        self.next = None


def _enabled(decisions):
    return lambda e: decisions.get(e.ident, False)


def _joint_distribution(psi: np.ndarray, dims: tuple, qubits: tuple):
    """All outcomes (levels per measured subsystem) with probability and collapsed state."""
    n = len(dims)
    if not qubits:
        return [((), 1.0, psi)]
    tensor = psi.reshape(tuple(reversed(dims)))
    probs = np.abs(tensor) ** 2
    axes = [n - 1 - q for q in qubits]
    others = tuple(a for a in range(n) if a not in axes)
    marginal = probs.sum(axis=others) if others else probs
    # marginal axes follow ascending axis order; reorder to `qubits` order
    order = sorted(axes)
    marginal = np.transpose(marginal, [order.index(a) for a in axes])
    out = []
    for levels in np.ndindex(marginal.shape):
        p = float(marginal[levels])
        if p <= PROB_FLOOR:
            continue
        mask = np.zeros(tensor.shape, dtype=bool)
        index = [slice(None)] * n
        for a, lv in zip(axes, levels):
            index[a] = lv
        mask[tuple(index)] = True
        collapsed = np.where(mask, tensor, 0).reshape(-1) / math.sqrt(p)
        out.append((tuple(int(x) for x in levels), p, collapsed))
    return out


def run_pulse_experiment(instructions, settings: PulseSettings, *, shots: int, seed: int = 0,
                         exp_index: int = 0, stop=None) -> PulseOutcome:
    sched = build_timelines(instructions, settings.library)
    model = settings.model
    dims = model.dims
    level = settings.meas_level
    for _, acq in sched.acquires:
        if acq.register_slot is not None and level != 2:
            raise RegisterWriteWithoutLevel2("register_slot needs meas_level 2")
        for q in acq.qubits or ():
            if q >= len(dims):
                raise ValueError(f"acquire on qubit {q} outside a {len(dims)}-subsystem model")

    acquires_at: dict = {}
    for ident, acq in sched.acquires:
        acquires_at.setdefault(acq.t0, []).append(acq)
    t_end = max([sched.end, *acquires_at])
    stops = sorted(set(acquires_at) | {t_end})
    events = sorted(sched.events(), key=lambda e: (e.t0, e.ident))
    snaps = sorted(((s.t0 if s.t0 is not None else t_end), s) for _, s in sched.snapshots)
    wave_cache: dict = {}
    snapshots: dict = {}

    def waveforms(decisions):
        key = tuple(sorted(k for k, v in decisions.items() if v))
        if key not in wave_cache:
            en = _enabled(decisions)
            wave_cache[key] = {ch: tl.waveform(t_end, en)[0] for ch, tl in sched.timelines.items()}
        return wave_cache[key]

    def advance(post: _Post, record: bool) -> _Pre:
        t_next = next(s for s in stops if s > post.t)
        decisions = dict(post.decisions)
        for e in events:
            if post.t <= e.t0 < t_next:
                decisions[e.ident] = e.conditional is None or bool(post.regs[e.conditional])
        waves = waveforms(decisions)
        psi, t = post.psi, post.t
        for ts, snap in snaps:
            if post.t <= ts < t_next:
                psi = model.evolve(psi, t, ts, waves)
                t = ts
                if record:
                    snapshots.setdefault(snap.type, {})[snap.label] = [[float(z.real), float(z.imag)] for z in psi]
        psi = model.evolve(psi, t, t_next, waves)
        return _Pre(t_next, psi, post.regs, decisions)

    psi0 = np.zeros(model.dim, dtype=complex)
    psi0[0] = 1.0
    regs0 = (0,) * settings.n_registers
    root = _Pre(0, psi0, regs0, {})
    if 0 not in acquires_at:
        root = advance(_Post(0, psi0, regs0, {}), True) if t_end > 0 else root
    shot_values, hex_memory = [], []
    final_state, phases = None, {}
    for shot in range(shots):
        if stop is not None and stop():
            raise Cancelled(f"stopped before shot {shot}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, exp_index, shot]))
        memory = _blank(level, settings)
        pre = root
        while True:
            group = acquires_at.get(pre.t, [])
            qubits = tuple(sorted({q for a in group for q in a.qubits}))
            if pre.dist is None:
                pre.dist = _joint_distribution(pre.psi, dims, qubits)
            outcome, psi_c = _sample(pre.dist, rng)
            bit_of = {q: int(lv != 0) for q, lv in zip(qubits, outcome)}
            regs = list(pre.regs)
            raw: dict = {}
            for acq in group:
                _service(acq, bit_of, raw, memory, regs, pre, sched, settings, rng)
            key = (outcome, tuple(regs))
            post = pre.children.get(key)
            if post is None:
                post = pre.children[key] = _Post(pre.t, psi_c, tuple(regs), pre.decisions)
            if pre.t >= t_end:
                break
            if post.next is None:
                post.next = advance(post, shot == 0)
            pre = post.next
        if level == 2:
            hex_memory.append(encode_hex(memory) if settings.memory_slots else "0x0")
        else:
            shot_values.append(memory)
        if shot == 0:
            final_state = post.psi
            # events at t_end only shift frames; resolve them against the final registers
            last = dict(post.decisions)
            for e in events:
                if e.t0 >= t_end:
                    last[e.ident] = e.conditional is None or bool(post.regs[e.conditional])
            en = _enabled(last)
            phases = {ch: tl.final_phase(en) for ch, tl in sched.timelines.items()}
    if final_state is None:
        final_state = root.psi
    if level == 2:
        counts = {}
        for h in sorted(set(hex_memory), key=lambda h: int(h, 16)):
            counts[h] = hex_memory.count(h)
        return PulseOutcome(hex_memory, counts, hex_memory, final_state, phases, snapshots)
    mem = assemble_memory(shot_values, level, settings.meas_return, settings.memory_slots,
                          settings.memory_slot_size)
    single = [assemble_memory([v], level, "avg", settings.memory_slots, settings.memory_slot_size)
              for v in shot_values]
    return PulseOutcome(mem, None, single, final_state, phases, snapshots)


def _blank(level, settings):
    if level == 2:
        return [0] * settings.memory_slots
    if level == 1:
        return np.zeros(settings.memory_slots, dtype=complex)
    return np.zeros((settings.memory_slots, settings.memory_slot_size or 0), dtype=complex)


def _sample(dist, rng):
    if len(dist) == 1:
        return dist[0][0], dist[0][2]
    r = rng.random() * sum(p for _, p, _ in dist)
    acc = 0.0
    for outcome, p, psi in dist:
        acc += p
        if r < acc:
            return outcome, psi
    return dist[-1][0], dist[-1][2]


def _stimulus(q, acq, pre, sched):
    tl = sched.timelines.get(f"m{q}")
    if tl is None:
        return np.zeros(acq.duration, dtype=complex)
    regs = pre.regs
    en = lambda e: e.conditional is None or bool(regs[e.conditional])  # noqa: E731
    wave, _ = tl.waveform(acq.t0 + acq.duration, en)
    return wave[acq.t0: acq.t0 + acq.duration]


def _service(acq, bit_of, raw, memory, regs, pre, sched, settings, rng):
    level = settings.meas_level
    native = max(1, round(acq.duration * settings.dt / settings.dtm))
    signals = []
    for q in acq.qubits:
        key = (q, acq.t0, acq.duration)
        if key not in raw:
            raw[key] = readout_signal(_stimulus(q, acq, pre, sched), bit_of[q], settings.dt,
                                      settings.dtm, native, settings.meas_noise_sigma, rng)
        signals.append(raw[key])
    if level == 0:
        size = settings.memory_slot_size or native
        for sig, slot in zip(signals, acq.memory_slot):
            row = np.zeros(size, dtype=complex)
            row[: min(size, len(sig))] = sig[:size]
            memory[slot] = row
        return
    kernels = [(k.name, k.params) for k in acq.kernels or ()] or [settings.default_kernel]
    iqs = []
    for k, sig in enumerate(signals):
        name, params = kernels[k] if len(kernels) == len(signals) else kernels[0]
        iqs.append(apply_kernel(name, sig, params))
    if level == 1:
        for z, slot in zip(iqs, acq.memory_slot):
            memory[slot] = z
        return
    discs = [(d.name, d.params) for d in acq.discriminators or ()] or [settings.default_discriminator]
    if len(discs) == len(iqs) and len(iqs) > 1:
        bits = [discriminate(name, [z], params)[0] for (name, params), z in zip(discs, iqs)]
    else:
        name, params = discs[0]
        bits = discriminate(name, iqs, params)
    for b, slot in zip(bits, acq.memory_slot):
        memory[slot] = b
    for b, r in zip(bits, acq.register_slot or ()):
        regs[r] = b
