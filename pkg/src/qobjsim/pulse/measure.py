"""Readout signal synthesis, kernels and discriminators."""

from __future__ import annotations

import math

import numpy as np


class KernelUnknown(ValueError):
    pass


class DiscriminatorUnknown(ValueError):
    pass


class RegisterWriteWithoutLevel2(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def readout_signal(stimulus: np.ndarray, bit: int, dt: float, dtm: float, n_out: int,
                   sigma: float, rng: np.random.Generator | None) -> np.ndarray:
    """Stimulus resampled to ``dtm`` by nearest sample, phase-shifted by pi/2 per excited bit, plus IQ noise."""
    idx = np.rint(np.arange(n_out) * dtm / dt).astype(int)
    out = np.zeros(n_out, dtype=complex)
    ok = idx < len(stimulus)
    out[ok] = stimulus[idx[ok]]
    out = out * np.exp(1j * (math.pi / 2) * bit)
    if sigma > 0 and rng is not None:
        out = out + rng.normal(0.0, sigma, n_out) + 1j * rng.normal(0.0, sigma, n_out)
    return out


def boxcar(signal: np.ndarray, params=()) -> complex:
    return complex(np.mean(signal)) if len(signal) else 0j


KERNELS = {"boxcar": boxcar, "default": boxcar}


def apply_kernel(name: str, signal: np.ndarray, params=()) -> complex:
    if name not in KERNELS:
        raise KernelUnknown(f"no kernel named {name!r}")
    return KERNELS[name](signal, params)


def max_1q_fidelity(iq: complex, params=()) -> int:
    """1 iff Q lies strictly above the line Q = a*I + b."""
    a, b = (params[0], params[1]) if len(params) >= 2 else (1.0, 0.0)
    return int(iq.imag > a * iq.real + b)


def max_2q_fidelity(iqs, params=()) -> list[int]:
    if params and len(params) != 2 * len(iqs):
        raise ValueError(f"max_2Q_fidelity needs {2 * len(iqs)} parameters, got {len(params)}")
    return [max_1q_fidelity(z, params[2 * k: 2 * k + 2]) for k, z in enumerate(iqs)]


def discriminate(name: str, iqs, params=()) -> list[int]:
    if name == "max_1Q_fidelity":
        return [max_1q_fidelity(z, params) for z in iqs]
    if name == "max_2Q_fidelity":
        return max_2q_fidelity(iqs, params)
    raise DiscriminatorUnknown(f"no discriminator named {name!r}")


def assemble_memory(shot_values: list, meas_level: int, meas_return: str, memory_slots: int,
                    memory_slot_size: int | None):
    """Level 0/1 ``memory`` in wire form; ``shot_values`` holds one complex array per shot."""
    shots = len(shot_values)
    if meas_level == 0:
        want = (memory_slots, memory_slot_size or 0)
    elif meas_level == 1:
        want = (memory_slots,)
    else:
        raise ShapeMismatch("level 2 memory is a list of hex strings")
    data = np.zeros((shots, *want), dtype=complex)
    for s, v in enumerate(shot_values):
        v = np.asarray(v, dtype=complex)
        if v.shape != want:
            raise ShapeMismatch(f"shot {s} has shape {v.shape}, expected {want}")
        data[s] = v
    if meas_return == "avg":
        data = data.mean(axis=0) if shots else np.zeros(want, dtype=complex)
    return _pairs(data)


def _pairs(a: np.ndarray):
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_pairs(x) for x in a]
