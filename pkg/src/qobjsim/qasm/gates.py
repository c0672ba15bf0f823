"""Gate matrices. For a k-qubit matrix, the first listed qubit is the least-significant index."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .qasmdef import QasmDef, eval_expr


class UnknownGate(KeyError):
    def __str__(self):
        return f"unknown gate {self.args[0]!r}"


class ArityMismatch(ValueError):
    pass


def u_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([
        [c, -cmath.exp(1j * lam) * s],
        [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c],
    ], dtype=complex)


# control is qubit 0 (low bit), target qubit 1
CX = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)

BUILTINS = {
    "U": (3, 1, lambda p: u_matrix(*p)),
    "u3": (3, 1, lambda p: u_matrix(*p)),
    "u2": (2, 1, lambda p: u_matrix(math.pi / 2, p[0], p[1])),
    "u1": (1, 1, lambda p: u_matrix(0.0, 0.0, p[0])),
    "CX": (0, 2, lambda p: CX),
    "cx": (0, 2, lambda p: CX),
}


def embed(op: np.ndarray, positions, k: int) -> np.ndarray:
    """Place ``op`` acting on ``positions`` (LSB first) inside a k-qubit space."""
    m = len(positions)
    full = np.zeros((1 << k, 1 << k), dtype=complex)
    for col in range(1 << k):
        sub_in = sum(((col >> q) & 1) << j for j, q in enumerate(positions))
        base = col
        for q in positions:
            base &= ~(1 << q)
        for sub_out in range(1 << m):
            amp = op[sub_out, sub_in]
            if amp == 0:
                continue
            row = base | sum(((sub_out >> j) & 1) << q for j, q in enumerate(positions))
            full[row, col] += amp
    return full


def gate_arity(name: str, defs: dict) -> tuple[int, int]:
    if name in BUILTINS:
        return BUILTINS[name][:2]
    if name in defs:
        d = defs[name]
        return len(d.params), len(d.args)
    raise UnknownGate(name)


def gate_matrix(name: str, params=(), defs: dict | None = None) -> np.ndarray:
    """Matrix of a builtin or a ``qasm_def`` composite; statements apply in listed order."""
    defs = defs or {}
    n_params, n_qubits = gate_arity(name, defs)
    params = tuple(params or ())
    if len(params) != n_params:
        raise ArityMismatch(f"{name} takes {n_params} parameters, got {len(params)}")
    if name in BUILTINS:
        return BUILTINS[name][2](params)
    d: QasmDef = defs[name]
    env = d.bind(params)
    where = {a: j for j, a in enumerate(d.args)}
    total = np.eye(1 << n_qubits, dtype=complex)
    for st in d.body:
        if st.op == "U":
            op = u_matrix(*(eval_expr(e, env) for e in st.exprs))
        else:
            op = CX
        total = embed(op, [where[q] for q in st.qargs], n_qubits) @ total
    return total
