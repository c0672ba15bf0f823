"""Shot windows for sectioned result delivery.

The first window is ``[0, n2]``; each later one starts at the previous ``n2 + 1``
and holds the 1-based shots ``n1..n2``. The delivery cursor counts shots already
served, so a window always carries the 0-based shots ``cursor:n2``. An exhausted
job yields ``[shots, shots]`` with no data.
"""

from __future__ import annotations

import numpy as np

from ..model.qobj import ExpData, ExperimentResult


def window_bounds(cursor: int, chunk: int, shots: int) -> tuple[int, int]:
    if chunk < 1:
        raise ValueError("chunk size must be positive")
    if cursor >= shots:
        return shots, shots
    if cursor == 0:
        return 0, min(chunk, shots)
    return cursor + 1, min(cursor + chunk, shots)


def all_windows(chunk: int, shots: int) -> list[tuple[int, int]]:
    out, cursor = [], 0
    while cursor < shots:
        w = window_bounds(cursor, chunk, shots)
        out.append(w)
        cursor = w[1]
    return out


def _counts(hexes) -> dict:
    counts: dict = {}
    for h in sorted(set(hexes), key=lambda h: int(h, 16)):
        counts[h] = hexes.count(h)
    return counts


def _mean_pairs(records):
    a = np.asarray(records, dtype=float)
    z = (a[..., 0] + 1j * a[..., 1]).mean(axis=0)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def window_result(res: ExperimentResult, records: list, cursor: int, chunk: int) -> ExperimentResult:
    """``res`` restricted to the window after ``cursor``; ``records`` holds one memory entry per shot."""
    shots = res.shot_count
    n1, n2 = window_bounds(cursor, chunk, shots)
    part = list(records[cursor:n2]) if cursor < shots else []
    data = res.data
    if data.counts is not None:
        new = ExpData(counts=_counts(part), memory=part if data.memory is not None else None)
    elif res.meas_return == "avg":
        new = ExpData(memory=_mean_pairs(part) if part else [])
    else:
        new = ExpData(memory=part)
    if cursor == 0:
        new = new.replace(statevector=data.statevector, snapshots=data.snapshots)
    return res.replace(shots=(n1, n2), data=new)
