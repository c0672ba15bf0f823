"""Pulse-level schedule execution and readout."""

from .engine import PulseOutcome, PulseSettings, run_pulse_experiment
from .measure import (
    DiscriminatorUnknown, KernelUnknown, RegisterWriteWithoutLevel2, ShapeMismatch, apply_kernel,
    assemble_memory, boxcar, discriminate, max_1q_fidelity, readout_signal,
)
from .propagate import NonlinearDriveUnsupported, RotatingModel
from .timeline import (
    ChannelTimeline, NonMonotoneT0, OverlappingPulses, ScheduleError, UnknownPulseName,
    build_timelines,
)
