import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qobjsim.hamiltonian import (
    ComplexScaleUnsupported, DslError, Subsystem, SubsystemLayout, UnboundVariable, bind_and_evaluate,
    duffing_hamiltonian, duffing_layout, duffing_term, evaluate_backend, evaluate_strings, parse_hstr, parse_term,
    qubit_layout, u_channel_frequency,
)
from qobjsim.hamiltonian.evaluate import local_operator
from qobjsim.hamiltonian.dsl import ChannelRef, Const, Operator, Product, SumMacro, Var, dump_terms
from qobjsim.model import parse_document
from qobjsim.registry import get_backend

from conftest import load_listing

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def kron(*ops):
    """Kronecker product with the first argument as the most significant factor."""
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


# parsing

def test_sum_macro_with_channel_binding():
    tree = parse_term("__SUM[i,0,1,_X{i}_||_D{i}_]").tree
    assert tree == SumMacro("i", 0, 1, Product((Operator("X", "i"), ChannelRef("D", "i"))))


def test_constant_frequency_product():
    tree = parse_term("2*pi*_v0_*_O{0}_").tree
    assert tree == Product((Const(2 * math.pi), Var("v0"), Operator("O", 0)))


def test_unbound_sum_bound():
    with pytest.raises(DslError, match="unbound bound N"):
        evaluate_strings(["SUM[i,0,N,_X{i}_]"], {}, None)


def test_syntax_error_reports_column_and_expected_tokens():
    with pytest.raises(DslError) as err:
        parse_term("_X{0}_*_*")
    assert err.value.column == 8
    assert "name" in err.value.expected


@pytest.mark.parametrize("text", ["__SUM[i,0,1", "_X{0", "2*(_X{0}_", "_X{0}_||"])
def test_truncated_terms_fail(text):
    with pytest.raises(DslError):
        parse_term(text)


def test_tree_debug_dump_is_json():
    dumped = dump_terms(parse_hstr(["__SUM[i,0,1,_X{i}_||_D{i}_]"]))
    assert dumped[0]["tree"]["node"] == "SUM"
    assert dumped[0]["tree"]["body"]["factors"][1] == {"node": "channel", "prefix": "D", "index": "i"}


@pytest.mark.parametrize("name", ["rabi_configuration.json", "ion_trap_configuration.json", "nmr_configuration.json",
                                  "tunable_bus_configuration.json", "tunable_qubits_configuration.json",
                                  "pulse_backend_configuration.json"])
def test_listed_hamiltonians_parse(name):
    cfg = parse_document("backend_configuration", load_listing(name))
    assert len(parse_hstr(cfg.hamiltonian.terms)) == len(cfg.hamiltonian.terms)


# evaluation against hand-built Kronecker oracles

def test_independent_qubits_example_matches_kronecker_oracle():
    h = load_listing("hamiltonian_example.json")
    ev = evaluate_strings(h["h_str"], h["vars"], 2)
    two_pi = 2 * math.pi
    # qubit 0 is the least-significant factor
    static = two_pi * 5.0 * kron(I2, P1) + two_pi * 5.25 * kron(P1, I2)
    assert ev.layout.dims == (2, 2)
    assert np.max(np.abs(ev.static - static)) < 1e-12
    assert set(ev.drives) == {"d0", "d1"}
    assert np.max(np.abs(ev.drives["d0"] - kron(I2, X))) < 1e-12
    assert np.max(np.abs(ev.drives["d1"] - kron(X, I2))) < 1e-12


def test_fixed_bus_matches_kronecker_oracle():
    ev = evaluate_backend(get_backend("fixed_bus").configuration)
    v, g, wb = (5.0, 5.1), (0.1, 0.1), 6.0
    a = np.diag(np.sqrt([1.0, 2.0]), 1).astype(complex)
    n_bus = a.conj().T @ a
    i3 = np.eye(3)
    qx = (kron(i3, I2, X), kron(i3, X, I2))
    qo = (kron(i3, I2, P1), kron(i3, P1, I2))
    static = sum(2 * math.pi * v[k] * qo[k] for k in range(2))
    static = static + 2 * math.pi * wb * kron(n_bus, I2, I2)
    static = static + sum(g[k] * qx[k] @ kron(a + a.conj().T, I2, I2) for k in range(2))
    assert ev.layout.dims == (2, 2, 3)
    assert ev.static.shape == (12, 12)
    assert np.max(np.abs(ev.static - static)) < 1e-12
    assert np.max(np.abs(ev.static - ev.static.conj().T)) < 1e-12
    for k in range(2):
        assert np.max(np.abs(ev.drives[f"d{k}"] - qx[k])) < 1e-12
        assert np.max(np.abs(ev.drives[f"u{k}"] - qx[k])) < 1e-12


@pytest.mark.parametrize("backend", ["desk_pulse", "rabi_1q", "fixed_bus", "tunable_qubits", "tunable_bus",
                                     "ion_trap", "nmr"])
def test_static_part_is_hermitian(backend):
    ev = evaluate_backend(get_backend(backend).configuration)
    assert np.max(np.abs(ev.static - ev.static.conj().T)) < 1e-12


def test_drive_contributions_hermitian_for_real_amplitude():
    ev = evaluate_backend(get_backend("fixed_bus").configuration)
    for m in ev.drives.values():
        h = 0.37 * m
        assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_empty_term_list():
    ev = evaluate_strings([], {}, 2)
    assert not ev.static.any()
    assert ev.drives == {}


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        evaluate_strings(["2*pi*_w_*_O{0}_"], {}, 1)


def test_no_implicit_two_pi():
    ev = evaluate_strings(["_v0_*_O{0}_"], {"v0": 5.0}, 1)
    assert np.allclose(ev.static, 5.0 * P1)


# algebraic properties

def test_sum_expansion_equals_manual_unrolling():
    vars_ = {"v0": 4.9, "v1": 5.3}
    macro = evaluate_strings(["__SUM[i,0,1,2*pi*_v{i}_*_O{i}_+_X{i}_||_D{i}_]"], vars_, 2)
    manual = evaluate_strings(["2*pi*_v0_*_O{0}_+_X{0}_||_D{0}_", "2*pi*_v1_*_O{1}_+_X{1}_||_D{1}_"], vars_, 2)
    assert np.max(np.abs(macro.static - manual.static)) <= 1e-14
    for ch in ("d0", "d1"):
        assert np.max(np.abs(macro.drives[ch] - manual.drives[ch])) <= 1e-14


def _single(term: str) -> np.ndarray:
    return bind_and_evaluate(parse_hstr([term]), {}, qubit_layout(1), 1).static


def test_operator_algebra_on_two_level_subsystem():
    q = Subsystem("qubit", 2)
    op = {k: local_operator(k, q) for k in ("X", "Z", "Sp", "Sm", "O", "a", "A")}
    assert np.array_equal(op["X"], op["Sp"] + op["Sm"])
    assert np.array_equal(op["O"], (np.eye(2) - op["Z"]) / 2)
    assert np.array_equal(op["a"], op["Sm"])
    assert np.array_equal(op["A"], op["Sp"])
    assert np.array_equal(_single("_X{0}_"), _single("_Sp{0}_+_Sm{0}_"))


def test_pauli_matrices():
    assert np.array_equal(_single("_X{0}_"), X)
    assert np.array_equal(_single("_Y{0}_"), Y)
    assert np.array_equal(_single("_Z{0}_"), Z)


def test_number_operator_on_oscillator():
    layout = SubsystemLayout((Subsystem("oscillator", 4),))
    ev = bind_and_evaluate(parse_hstr(["_O{0}_"]), {}, layout, 1)
    assert np.allclose(ev.static, np.diag([0, 1, 2, 3]))


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 10.0), st.floats(-1.0, 1.0).filter(lambda d: abs(d) > 1e-3))
def test_linear_in_frequency_variable(v0, dv):
    h = load_listing("hamiltonian_example.json")
    base = evaluate_strings(h["h_str"], {**h["vars"], "v0": v0}, 2).static
    moved = evaluate_strings(h["h_str"], {**h["vars"], "v0": v0 + dv}, 2).static
    slope = (moved - base) / dv
    assert np.max(np.abs(slope - 2 * math.pi * kron(I2, P1))) < 1e-9


# Duffing helper

def test_duffing_vanishes_for_two_levels():
    assert not duffing_term(2, -0.3).any()
    layout = duffing_layout(3, levels=2)
    assert not duffing_hamiltonian(layout, [-0.3, -0.2, 0.1]).any()


def test_duffing_three_levels():
    want = np.diag([(-0.3 / 2) * (1 - n) * n for n in range(3)])
    assert np.allclose(duffing_term(3, -0.3), want, atol=1e-15)


def test_duffing_layout_dimension():
    assert duffing_layout(2, levels=3).dim == 9


# U-channel LO

def test_u_channel_single_qubit():
    assert u_channel_frequency([{"q": 0, "scale": [1, 0]}], [5.0, 5.1]) == 5.0


def test_u_channel_difference():
    spec = [{"q": 0, "scale": [-1, 0]}, {"q": 1, "scale": [1, 0]}]
    assert u_channel_frequency(spec, [5.0, 5.1]) == pytest.approx(0.1, abs=1e-12)


def test_u_channel_empty():
    assert u_channel_frequency([], [5.0]) == 0.0


def test_u_channel_complex_scale_rejected():
    with pytest.raises(ComplexScaleUnsupported):
        u_channel_frequency([{"q": 0, "scale": [0, 1]}], [5.0])
