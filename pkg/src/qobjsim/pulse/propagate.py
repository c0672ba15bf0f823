"""Piecewise-constant propagation in the frame of the static diagonal.

With ``F = diag(H_static)``, matrix element (j, k) of any operator picks up
``exp(i (F_j - F_k) t)`` in the rotating frame. A drive operator ``M`` on a
channel with LO angular frequency ``w`` is split by ``nu = F_j - F_k`` and
each part keeps only its co-rotating amplitude (RWA)::

    nu > 0:  (k/2) * s~ * exp(-i (w - nu) t) * M_nu
    nu < 0:  the Hermitian partner of the +|nu| part
    nu = 0:  (k/2) * (s~ + conj(s~)) * M_0

where ``s~`` is the frame-changed sample and ``k`` the drive scale.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

NU_DIGITS = 9
MAX_PHASE_PER_SUBSTEP = 0.1


class NonlinearDriveUnsupported(ValueError):
    pass


def _split_by_frequency(m: np.ndarray, nu: np.ndarray) -> list[tuple[float, np.ndarray]]:
    groups: dict = {}
    for j, k in zip(*np.nonzero(np.abs(m) > 0)):
        key = round(float(nu[j, k]), NU_DIGITS)
        _, g = groups.setdefault(key, (float(nu[j, k]), np.zeros_like(m)))
        g[j, k] = m[j, k]
    return [groups[key] for key in sorted(groups)]


class RotatingModel:
    def __init__(self, ham, lo_ghz: dict, drive_scale: float, dt: float, substeps: int = 1):
        if ham.nonlinear:
            texts = "; ".join(t.text for t in ham.nonlinear)
            raise NonlinearDriveUnsupported(f"channel amplitude inside a nonlinear term: {texts}")
        self.dim = ham.dim
        self.dims = ham.layout.dims
        self.dt = dt
        self.kappa = drive_scale
        f = np.real(np.diag(ham.static)).copy()
        self.frame = f
        nu = f[:, None] - f[None, :]
        off = ham.static - np.diag(np.diag(ham.static))
        self.static_groups = _split_by_frequency(off, nu)
        self.drive_groups = {}
        rates = [abs(v) for v, _ in self.static_groups]
        for ch, m in ham.drives.items():
            w = 2 * math.pi * lo_ghz.get(ch, 0.0)
            groups = []
            for v, g in _split_by_frequency(m, nu):
                groups.append((v, w, g))
                if v != 0:
                    rates.append(abs(w - abs(v)))
            self.drive_groups[ch] = groups
        self.time_dependent = any(r > 1e-9 for r in rates)
        needed = math.ceil(max(rates, default=0.0) * dt / MAX_PHASE_PER_SUBSTEP)
        self.substeps = max(1, substeps, needed)
        self._cache: dict = {}

    def hamiltonian(self, t: float, samples: dict) -> np.ndarray | None:
        """Rotating-frame Hamiltonian at time ``t`` (ns); None when it vanishes."""
        h = None
        for v, g in self.static_groups:
            term = g * np.exp(1j * v * t)
            h = term if h is None else h + term
        for ch, s in samples.items():
            if s == 0 or ch not in self.drive_groups:
                continue
            for v, w, g in self.drive_groups[ch]:
                if v > 0:
                    c = s * np.exp(-1j * (w - v) * t)
                elif v < 0:
                    c = np.conj(s * np.exp(-1j * (w + v) * t))
                else:
                    c = s + np.conj(s)
                term = (self.kappa / 2) * c * g
                h = term if h is None else h + term
        return h

    def step(self, psi: np.ndarray, n: int, samples: dict) -> np.ndarray:
        """Advance ``psi`` across sample ``n``."""
        active = {ch: s for ch, s in samples.items() if s != 0 and ch in self.drive_groups}
        if not active and not self.static_groups:
            return psi
        if not self.time_dependent:
            key = tuple(sorted(active.items()))
            u = self._cache.get(key)
            if u is None:
                h = self.hamiltonian(0.0, active)
                u = expm(-1j * h * self.dt)
                if len(self._cache) < 4096:
                    self._cache[key] = u
            return u @ psi
        h_sub = self.dt / self.substeps
        for k in range(self.substeps):
            t = (n + (k + 0.5) / self.substeps) * self.dt
            h = self.hamiltonian(t, active)
            if h is not None:
                psi = expm(-1j * h * h_sub) @ psi
        return psi

    def evolve(self, psi: np.ndarray, n0: int, n1: int, waveforms: dict) -> np.ndarray:
        driven = {ch: w for ch, w in waveforms.items() if ch in self.drive_groups}
        for n in range(n0, n1):
            psi = self.step(psi, n, {ch: w[n] if n < len(w) else 0j for ch, w in driven.items()})
        return psi
