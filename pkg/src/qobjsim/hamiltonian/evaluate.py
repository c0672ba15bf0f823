"""Turn parsed h_str terms into matrices on a tensor-product layout.

Subsystem 0 is the least-significant tensor factor, so a full operator is
``kron(op[n-1], ..., op[0])``. Intermediate values are polynomials in the
channel amplitudes of degree at most one: ``{None: static, "d0": M, ...}``,
where each coefficient is either a scalar (a multiple of identity) or a
dense matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .dsl import (
    CHANNELS, ChannelRef, Const, DslError, HTerm, Nonlinear, Operator, Product, Sum,
    SumMacro, Var, parse_hstr,
)

DEFAULT_OSCILLATOR_LEVELS = 3
HERMITIAN_TOL = 1e-12


class UnboundVariable(DslError):
    pass


class DimensionMismatch(DslError):
    pass


class NonHermitianStatic(ValueError):
    pass


class ComplexScaleUnsupported(ValueError):
    pass


class _ChannelInNonlinear(Exception):
    def __init__(self, channels):
        self.channels = channels


@dataclass(frozen=True)
class Subsystem:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("qubit", "oscillator"):
            raise ValueError(f"unknown subsystem kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("subsystem dimension must be >= 2")


@dataclass(frozen=True)
class SubsystemLayout:
    subsystems: tuple

    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def oscillators(self) -> list[int]:
        return [k for k, s in enumerate(self.subsystems) if s.kind == "oscillator"]

    def embed(self, op: np.ndarray, index: int) -> np.ndarray:
        factors = [np.eye(d, dtype=complex) for d in self.dims]
        factors[index] = op
        return reduce(np.kron, reversed(factors))


def qubit_layout(n: int) -> SubsystemLayout:
    return SubsystemLayout(tuple(Subsystem("qubit", 2) for _ in range(n)))


def duffing_layout(n_qubits: int, anharmonicities=(), levels: int = DEFAULT_OSCILLATOR_LEVELS) -> SubsystemLayout:
    """Every qubit modelled as a ``levels``-dimensional oscillator."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    return SubsystemLayout(tuple(Subsystem("oscillator", levels) for _ in range(n_qubits)))


def duffing_term(levels: int, delta: float) -> np.ndarray:
    """(delta/2)(1 - n) n on one oscillator."""
    n = np.diag(np.arange(levels, dtype=float))
    eye = np.eye(levels)
    return (delta / 2) * (eye - n) @ n


def duffing_hamiltonian(layout: SubsystemLayout, anharmonicities) -> np.ndarray:
    total = np.zeros((layout.dim, layout.dim), dtype=complex)
    for k, delta in enumerate(anharmonicities):
        total += layout.embed(duffing_term(layout.dims[k], delta), k)
    return total


def local_operator(kind: str, sub: Subsystem) -> np.ndarray:
    d = sub.dim
    lower = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    raise_ = lower.conj().T
    number = raise_ @ lower
    eye = np.eye(d, dtype=complex)
    if sub.kind == "qubit":
        z = np.diag([1.0, -1.0]).astype(complex)
        table = {
            "X": lower + raise_, "Y": 1j * (raise_ - lower), "Z": z,
            "Sp": raise_, "Sm": lower, "A": raise_, "a": lower,
            "O": (eye - z) / 2, "N": (eye - z) / 2,
        }
    else:
        table = {
            "X": lower + raise_, "Y": 1j * (raise_ - lower), "Z": eye - 2 * number,
            "Sp": raise_, "Sm": lower, "A": raise_, "a": lower, "O": number, "N": number,
        }
    return table[kind]


def _bound(value, n_qubits, env, text):
    if isinstance(value, int):
        return value
    if value in env:
        return env[value]
    if value == "N":
        if n_qubits is None:
            raise DslError("unbound bound N", text=text)
        return n_qubits - 1
    raise UnboundVariable(f"unbound index {value}", text=text)


def _index(value, env, text):
    if isinstance(value, int):
        return value
    if value in env:
        return env[value]
    raise UnboundVariable(f"unbound index {value}", text=text)


def _iter_leaves(node, env, n_qubits, text):
    """Yield (leaf, env) pairs with SUM macros unrolled."""
    if isinstance(node, SumMacro):
        lo = _bound(node.lo, n_qubits, env, text)
        hi = _bound(node.hi, n_qubits, env, text)
        for v in range(lo, hi + 1):
            yield from _iter_leaves(node.body, {**env, node.var: v}, n_qubits, text)
    elif isinstance(node, (Product, Sum)):
        for child in node.factors if isinstance(node, Product) else node.terms:
            yield from _iter_leaves(child, env, n_qubits, text)
    elif isinstance(node, Nonlinear):
        for child in node.args:
            yield from _iter_leaves(child, env, n_qubits, text)
    else:
        yield node, env


def subsystem_indices(terms: list[HTerm], n_qubits: int | None) -> set[int]:
    found = set()
    for term in terms:
        for leaf, env in _iter_leaves(term.tree, {}, n_qubits, term.text):
            if isinstance(leaf, Operator) and leaf.index is not None:
                found.add(_index(leaf.index, env, term.text))
    return found


def layout_for(terms: list[HTerm], n_qubits: int, osc_levels: dict | None = None,
               default_levels: int = DEFAULT_OSCILLATOR_LEVELS) -> SubsystemLayout:
    """Qubits below ``n_qubits``; every other referenced or declared index is an oscillator."""
    osc_levels = dict(osc_levels or {})
    used = subsystem_indices(terms, n_qubits) | set(osc_levels) | set(range(n_qubits))
    subs = []
    for k in range(max(used) + 1 if used else 0):
        if k in osc_levels:
            subs.append(Subsystem("oscillator", osc_levels[k]))
        elif k < n_qubits:
            subs.append(Subsystem("qubit", 2))
        else:
            subs.append(Subsystem("oscillator", default_levels))
    return SubsystemLayout(tuple(subs))


def _is_scalar(x) -> bool:
    return not isinstance(x, np.ndarray)


def _add(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out[k] + v if k in out else v
    return out


def _mul(p: dict, q: dict, text: str) -> dict:
    out = {}
    for kp, vp in p.items():
        for kq, vq in q.items():
            if kp is not None and kq is not None:
                raise DslError(f"product of channels {kp} and {kq}", text=text)
            key = kp if kp is not None else kq
            v = vp * vq if _is_scalar(vp) or _is_scalar(vq) else vp @ vq
            out[key] = out[key] + v if key in out else v
    return out


def _scalar_value(p: dict, node, text) -> complex:
    channels = [k for k in p if k is not None]
    if channels:
        raise _ChannelInNonlinear(channels)
    v = p.get(None, 0.0)
    if _is_scalar(v):
        return v
    diag = np.diag(v)
    if np.allclose(v, np.diag(diag)) and np.allclose(diag, diag[0]):
        return diag[0]
    raise DslError(f"{node.func} of an operator-valued argument", text=text)


_FUNCS = {
    "sqrt": lambda z: np.sqrt(z + 0j) if z.real < 0 or z.imag else math.sqrt(z.real),
    "abs": lambda z: abs(z),
    "cos": lambda z: np.cos(z),
    "sin": lambda z: np.sin(z),
    "exp": lambda z: np.exp(z),
}


class _Evaluator:
    def __init__(self, variables, layout, n_qubits):
        self.vars = dict(variables)
        self.layout = layout
        self.n_qubits = n_qubits
        self.cache = {}

    def operator(self, kind, index, text):
        if index is None:
            osc = self.layout.oscillators()
            if len(osc) != 1:
                raise DslError(f"bare {kind} needs exactly one oscillator subsystem, layout has {len(osc)}", text=text)
            index = osc[0]
        if not 0 <= index < len(self.layout.subsystems):
            raise DimensionMismatch(f"operator {kind}{{{index}}} outside a {len(self.layout.subsystems)}-subsystem layout", text=text)
        key = (kind, index)
        if key not in self.cache:
            self.cache[key] = self.layout.embed(local_operator(kind, self.layout.subsystems[index]), index)
        return self.cache[key]

    def eval(self, node, env, text) -> dict:
        if isinstance(node, Const):
            return {None: complex(node.value)}
        if isinstance(node, Var):
            name = node.name if node.index is None else f"{node.name}{_index(node.index, env, text)}"
            if name not in self.vars:
                raise UnboundVariable(f"unbound variable {name}", text=text)
            return {None: complex(self.vars[name])}
        if isinstance(node, ChannelRef):
            return {f"{CHANNELS[node.prefix]}{_index(node.index, env, text)}": 1.0 + 0j}
        if isinstance(node, Operator):
            index = None if node.index is None else _index(node.index, env, text)
            return {None: self.operator(node.kind, index, text)}
        if isinstance(node, Product):
            return reduce(lambda p, f: _mul(p, self.eval(f, env, text), text), node.factors, {None: 1.0 + 0j})
        if isinstance(node, Sum):
            return reduce(lambda p, t: _add(p, self.eval(t, env, text)), node.terms, {})
        if isinstance(node, SumMacro):
            lo = _bound(node.lo, self.n_qubits, env, text)
            hi = _bound(node.hi, self.n_qubits, env, text)
            total = {}
            for v in range(lo, hi + 1):
                total = _add(total, self.eval(node.body, {**env, node.var: v}, text))
            return total
        if isinstance(node, Nonlinear):
            args = [self.eval(a, env, text) for a in node.args]
            if node.func == "div":
                den = _scalar_value(args[1], node, text)
                return {k: v / den for k, v in args[0].items()}
            return {None: complex(_FUNCS[node.func](complex(_scalar_value(args[0], node, text))))}
        raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class NonlinearTerm:
    """A term whose channel amplitude sits inside a nonlinear function."""

    index: int
    text: str
    channels: tuple


@dataclass
class EvaluatedHamiltonian:
    """``H(t) = static + sum_ch amp_ch(t) * drives[ch]`` in rad/ns."""

    layout: SubsystemLayout
    static: np.ndarray
    drives: dict = field(default_factory=dict)
    nonlinear: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.layout.dim


def _as_matrix(v, dim):
    return v * np.eye(dim, dtype=complex) if _is_scalar(v) else v


def bind_and_evaluate(terms: list[HTerm], variables: dict, layout: SubsystemLayout,
                      n_qubits: int | None) -> EvaluatedHamiltonian:
    ev = _Evaluator(variables, layout, n_qubits)
    dim = layout.dim
    static = np.zeros((dim, dim), dtype=complex)
    drives: dict = {}
    nonlinear = []
    for k, term in enumerate(terms):
        try:
            poly = ev.eval(term.tree, {}, term.text)
        except _ChannelInNonlinear as e:
            nonlinear.append(NonlinearTerm(k, term.text, tuple(sorted(set(e.channels)))))
            continue
        for ch, v in poly.items():
            m = _as_matrix(v, dim)
            if ch is None:
                static = static + m
            else:
                drives[ch] = drives[ch] + m if ch in drives else m
    residual = np.max(np.abs(static - static.conj().T)) if dim else 0.0
    if residual > HERMITIAN_TOL * max(1.0, np.max(np.abs(static))):
        raise NonHermitianStatic(f"static part is not Hermitian (residual {residual:.3e})")
    return EvaluatedHamiltonian(layout, static, dict(sorted(drives.items())), nonlinear)


def evaluate_strings(h_str, variables: dict, n_qubits: int, osc_levels: dict | None = None,
                     default_levels: int = DEFAULT_OSCILLATOR_LEVELS) -> EvaluatedHamiltonian:
    terms = parse_hstr(h_str)
    layout = layout_for(terms, n_qubits, osc_levels, default_levels)
    return bind_and_evaluate(terms, variables, layout, n_qubits)


def evaluate_backend(cfg, default_levels: int = DEFAULT_OSCILLATOR_LEVELS) -> EvaluatedHamiltonian:
    """Evaluate a configuration's ``hamiltonian`` block."""
    ham = cfg.hamiltonian
    if ham is None:
        raise DslError(f"backend {cfg.backend_name} has no hamiltonian")
    return evaluate_strings(ham.terms, ham.variables, cfg.n_qubits, ham.oscillator_levels(), default_levels)


def u_channel_frequency(spec, qubit_lo_freq) -> float:
    """Sum of scale * qubit LO over the terms of one U channel, in GHz."""
    total = 0.0
    for term in spec:
        scale = term.scale if hasattr(term, "scale") else term["scale"]
        q = term.q if hasattr(term, "q") else term["q"]
        re_, im = (scale.re, scale.im) if hasattr(scale, "re") else scale
        if im != 0:
            raise ComplexScaleUnsupported(f"U-channel scale {[re_, im]} has an imaginary part")
        total += re_ * qubit_lo_freq[q]
    return total
