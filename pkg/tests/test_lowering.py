import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qobjsim.lowering import (
    ConditionalOnUnsupportedChannel, MissingCmdDef, MissingParameter, UnsupportedInstruction, lower_experiment,
    lower_qobj, substitute_params,
)
from qobjsim.model import Acquire, DrivePulse, FrameChange, parse_document, parse_qobj, validate_qobj
from qobjsim.registry import get_backend

from conftest import load_listing, lowered_vs_qasm, phase_fidelity

DEFAULTS = parse_document("backend_defaults", load_listing("pulse_backend_defaults.json"))
LIBRARY = {e.name: e for e in DEFAULTS.pulse_library}


def lower(instructions, defaults=DEFAULTS, cfg=None):
    exp = parse_document("experiment", {"instructions": instructions})
    return list(lower_experiment(exp, defaults, {e.name: e for e in defaults.pulse_library}, cfg).instructions)


def summary(lowered):
    return [(i.name, getattr(i, "ch", None), i.t0) for i in lowered]


# parameter substitution

def test_u1_phase_token():
    body = substitute_params(DEFAULTS.find_cmd("u1", [0]), [3.14159])
    assert len(body) == 1 and body[0].phase == 3.14159


def test_no_tokens_no_actuals_is_identity():
    entry = DEFAULTS.find_cmd("measure", [0])
    assert substitute_params(entry, []) == list(entry.body)


def test_u2_tokens_and_fixed_phases():
    body = substitute_params(DEFAULTS.find_cmd("u2", [0]), [0, math.pi])
    fcs = [(i.t0, i.phase) for i in body if isinstance(i, FrameChange)]
    assert fcs == [(0, math.pi), (0, 1.5708), (11, -1.5708), (11, 0.0)]


def test_missing_parameter():
    with pytest.raises(MissingParameter):
        substitute_params(DEFAULTS.find_cmd("u3", [0]), [1.0, 2.0])


# scheduling

def test_single_u1_is_one_frame_change_at_zero():
    out = lower([{"name": "u1", "qubits": [0], "params": [0.7]}])
    assert summary(out) == [("fc", "d0", 0)]


def test_u3_listing_timing():
    out = lower([{"name": "u3", "qubits": [0], "params": [1.0, 2.0, 3.0]}])
    assert len(out) == 7
    assert [i.t0 for i in out if isinstance(i, DrivePulse)] == [0, 11]
    assert max(i.t0 for i in out) == 22


def test_cx_then_measure_waits_for_buffer():
    out = lower([{"name": "cx", "qubits": [0, 1]}, {"name": "measure", "qubits": [0], "memory": [0]}])
    sq = [i for i in out if i.name == "square_pulse"]
    acq = [i for i in out if isinstance(i, Acquire)]
    # cx ends with gauss_square on u0 at 54 + 10 samples; buffer 10
    assert sq[0].t0 == 54 + 10 + 10
    assert acq[0].t0 == sq[0].t0 + 3


def test_buffer_separates_consecutive_gates_on_a_qubit():
    out = lower([{"name": "u2", "qubits": [0], "params": [0, 0]}, {"name": "u2", "qubits": [0], "params": [0, 0]}])
    pulses = [i.t0 for i in out if isinstance(i, DrivePulse)]
    assert pulses == [0, 11 + DEFAULTS.buffer]


def test_measure_rewrites_memory_and_register_slots():
    out = lower([{"name": "measure", "qubits": [0], "memory": [3], "register": [1]}])
    acq = next(i for i in out if isinstance(i, Acquire))
    assert acq.memory_slot == (3,) and acq.register_slot == (1,) and acq.qubits == (0,)


def test_multi_qubit_measure_decomposes_at_common_start():
    b = get_backend("desk_pulse")
    out = lower([{"name": "u2", "qubits": [0], "params": [0, 0]},
                 {"name": "measure", "qubits": [0, 1], "memory": [0, 1]}], b.defaults, b.configuration)
    acqs = [i for i in out if isinstance(i, Acquire)]
    assert [a.memory_slot for a in acqs] == [(0,), (1,)]
    assert acqs[0].t0 == acqs[1].t0


def test_barrier_synchronizes_qubits():
    b = get_backend("desk_pulse")
    prog = [{"name": "u2", "qubits": [0], "params": [0, 0]}, {"name": "barrier", "qubits": [0, 1]},
            {"name": "u2", "qubits": [1], "params": [0, 0]}]
    out = lower(prog, b.defaults, b.configuration)
    d1 = [i.t0 for i in out if isinstance(i, DrivePulse) and i.ch == "d1"]
    assert d1 == [11 + b.defaults.buffer]


def test_without_barrier_disjoint_qubits_run_concurrently():
    b = get_backend("desk_pulse")
    prog = [{"name": "u2", "qubits": [0], "params": [0, 0]}, {"name": "u2", "qubits": [1], "params": [0, 0]}]
    out = lower(prog, b.defaults, b.configuration)
    assert {i.ch: i.t0 for i in out if isinstance(i, DrivePulse)} == {"d0": 0, "d1": 0}


def test_conditional_propagates_to_every_pulse():
    out = lower([{"name": "u3", "qubits": [0], "params": [1, 2, 3], "conditional": 2}])
    assert all(i.conditional == 2 for i in out)


def test_conditional_measure_unsupported():
    entry = DEFAULTS.find_cmd("measure", [0])
    from qobjsim.lowering import LoweringContext

    with pytest.raises(ConditionalOnUnsupportedChannel):
        LoweringContext(DEFAULTS, LIBRARY).place(entry, [0], [], conditional=1)


def test_missing_cmd_def():
    with pytest.raises(MissingCmdDef):
        lower([{"name": "cx", "qubits": [1, 0]}])
    with pytest.raises(MissingCmdDef):
        lower([{"name": "u1", "qubits": [4], "params": [0.1]}])


@pytest.mark.parametrize("ins", [
    {"name": "bfunc", "mask": "0x1", "relation": "==", "val": "0x1", "register": 0},
    {"name": "copy", "register_orig": 0, "register_copy": [1]},
    {"name": "reset", "qubits": [0]},
])
def test_classical_instructions_have_no_pulse_form(ins):
    with pytest.raises(UnsupportedInstruction):
        lower([ins])


def test_empty_experiment():
    assert lower([]) == []


ONE_Q = [("u1", 1), ("u2", 2), ("u3", 3)]


@st.composite
def one_qubit_circuits(draw, max_len=6):
    out = []
    for _ in range(draw(st.integers(0, max_len))):
        name, n = draw(st.sampled_from(ONE_Q))
        out.append({"name": name, "qubits": [0], "params": [draw(st.floats(-math.pi, math.pi)) for _ in range(n)]})
    return out


@st.composite
def two_qubit_circuits(draw, max_len=8):
    out = []
    for _ in range(draw(st.integers(0, max_len))):
        kind = draw(st.sampled_from(["u1", "u2", "u3", "cx", "barrier", "measure"]))
        q = draw(st.integers(0, 1))
        if kind == "cx":
            out.append({"name": "cx", "qubits": [0, 1]})
        elif kind == "barrier":
            out.append({"name": "barrier", "qubits": [0, 1]})
        elif kind == "measure":
            out.append({"name": "measure", "qubits": [q], "memory": [q]})
        else:
            n = dict(ONE_Q)[kind]
            out.append({"name": kind, "qubits": [q], "params": [draw(st.floats(-3, 3)) for _ in range(n)]})
    return out


@settings(max_examples=40, deadline=None)
@given(two_qubit_circuits())
def test_lowering_is_idempotent(prog):
    b = get_backend("desk_pulse")
    assert summary(lower(prog, b.defaults, b.configuration)) == summary(lower(prog, b.defaults, b.configuration))


@settings(max_examples=40, deadline=None)
@given(two_qubit_circuits())
def test_per_channel_order_follows_program_order(prog):
    b = get_backend("desk_pulse")
    exp = parse_document("experiment", {"instructions": prog})
    library = {e.name: e for e in b.defaults.pulse_library}
    out = lower_experiment(exp, b.defaults, library, b.configuration).instructions
    by_channel: dict = {}
    for ins in out:
        ch = getattr(ins, "ch", None)
        if ch is not None:
            by_channel.setdefault(ch, []).append(ins)
    for events in by_channel.values():
        t0s = [e.t0 for e in events]
        assert t0s == sorted(t0s)
        pulses = sorted((e.t0, e.t0 + len(library[e.name].samples)) for e in events if isinstance(e, DrivePulse))
        assert all(a[1] <= b_[0] for a, b_ in zip(pulses, pulses[1:]))


@settings(max_examples=40, deadline=None)
@given(two_qubit_circuits())
def test_lowered_qobj_validates(prog):
    b = get_backend("desk_pulse")
    slots = 2
    raw = {"qobj_id": "l", "type": "QASM", "schema_version": "1.0", "config": {"shots": 4, "memory_slots": slots},
           "experiments": [{"instructions": prog}]}
    lowered = lower_qobj(parse_qobj(raw), b.defaults, b.configuration)
    assert lowered.type == "PULSE"
    assert validate_qobj(lowered, b.configuration, b.defaults).errors == []


@settings(max_examples=25, deadline=None)
@given(one_qubit_circuits())
def test_semantic_preservation_property(prog):
    qasm, pulse = lowered_vs_qasm(prog)
    assert phase_fidelity(qasm, pulse) > 1 - 1e-3


def test_semantic_preservation_identity_and_x():
    qasm, pulse = lowered_vs_qasm([{"name": "u3", "qubits": [0], "params": [math.pi, 0, math.pi]}])
    assert abs(pulse[1]) ** 2 > 0.999
    assert phase_fidelity(qasm, pulse) > 1 - 1e-3
    qasm, pulse = lowered_vs_qasm([])
    assert np.allclose(qasm, pulse)
