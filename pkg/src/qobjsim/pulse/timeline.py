"""Per-channel event streams and the sampled waveforms they produce."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model.instructions import Acquire, DrivePulse, FrameChange, PersistentValue, Snapshot


class ScheduleError(ValueError):
    pass


class OverlappingPulses(ScheduleError):
    pass


class UnknownPulseName(ScheduleError):
    pass


class NonMonotoneT0(ScheduleError):
    pass


@dataclass(frozen=True)
class TimelineEvent:
    ident: int
    t0: int
    kind: str
    samples: np.ndarray | None = None
    phase: float = 0.0
    value: complex = 0j
    conditional: int | None = None

    @property
    def end(self) -> int:
        return self.t0 + (len(self.samples) if self.samples is not None else 0)


@dataclass
class ChannelTimeline:
    channel: str
    events: list = field(default_factory=list)

    @property
    def end(self) -> int:
        return max((e.end if e.kind == "pulse" else e.t0 for e in self.events), default=0)

    def waveform(self, length: int, enabled=None) -> tuple[np.ndarray, np.ndarray]:
        """Frame-rotated samples ``s * exp(-i phase)`` and the accumulated phase per sample.

        ``enabled(event)`` filters conditional events; a persistent value holds
        until the next enabled pulse or persistent value on the channel.
        """
        raw = np.zeros(length, dtype=complex)
        phase = np.zeros(length)
        active = [e for e in self.events if enabled is None or enabled(e)]
        starts = sorted(e.t0 for e in active if e.kind in ("pulse", "pv"))
        for e in active:
            if e.t0 >= length:
                continue
            if e.kind == "pulse":
                stop = min(e.end, length)
                raw[e.t0:stop] = e.samples[: stop - e.t0]
            elif e.kind == "pv":
                later = [s for s in starts if s > e.t0]
                stop = min(later[0] if later else length, length)
                raw[e.t0:stop] = e.value
        total = 0.0
        cursor = 0
        for e in sorted((e for e in active if e.kind == "fc"), key=lambda e: e.t0):
            start = min(e.t0, length)
            phase[cursor:start] = total
            total = total + e.phase
            cursor = start
        phase[cursor:] = total
        return raw * np.exp(-1j * phase), phase

    def final_phase(self, enabled=None) -> float:
        total = 0.0
        for e in sorted(self.events, key=lambda e: e.t0):
            if e.kind == "fc" and (enabled is None or enabled(e)):
                total = total + e.phase
        return total


@dataclass
class Schedule:
    timelines: dict
    acquires: list
    snapshots: list
    end: int

    def events(self):
        for tl in self.timelines.values():
            yield from tl.events


def build_timelines(instructions, library: dict) -> Schedule:
    """``library`` maps pulse names to complex sample arrays."""
    timelines: dict = {}
    acquires, snapshots = [], []
    end = 0
    busy: dict = {}
    for ident, ins in enumerate(instructions):
        if isinstance(ins, Acquire):
            acquires.append((ident, ins))
            end = max(end, ins.t0 + ins.duration)
            continue
        if isinstance(ins, Snapshot):
            snapshots.append((ident, ins))
            end = max(end, ins.t0 or 0)
            continue
        if isinstance(ins, DrivePulse):
            if ins.name not in library:
                raise UnknownPulseName(f"instruction {ident}: no pulse named {ins.name!r}")
            samples = np.asarray(library[ins.name], dtype=complex)
            ev = TimelineEvent(ident, ins.t0, "pulse", samples=samples, conditional=ins.conditional)
            for other in busy.get(ins.ch, ()):
                if ev.t0 < other.end and other.t0 < ev.end:
                    raise OverlappingPulses(f"instruction {ident} overlaps instruction {other.ident} on {ins.ch}")
            busy.setdefault(ins.ch, []).append(ev)
        elif isinstance(ins, FrameChange):
            ev = TimelineEvent(ident, ins.t0, "fc", phase=float(ins.phase), conditional=ins.conditional)
        elif isinstance(ins, PersistentValue):
            ev = TimelineEvent(ident, ins.t0, "pv", value=ins.val.value, conditional=ins.conditional)
        else:
            raise ScheduleError(f"instruction {ident}: {ins.name!r} is not a pulse command")
        tl = timelines.setdefault(ins.ch, ChannelTimeline(ins.ch))
        if tl.events and ev.t0 < tl.events[-1].t0:
            raise NonMonotoneT0(f"instruction {ident} on {ins.ch} starts before the previous event")
        tl.events.append(ev)
        end = max(end, ev.end if ev.kind == "pulse" else ev.t0)
    return Schedule(timelines, acquires, snapshots, end)
