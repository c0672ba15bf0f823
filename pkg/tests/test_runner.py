import copy

import numpy as np
import pytest

from qobjsim.model import dump_document, parse_qobj, validate_result
from qobjsim.registry import get_backend
from qobjsim.runner import EngineMismatch, pick_seed, run_qobj

from conftest import load_listing


def run(raw, backend, **kw):
    kw.setdefault("job_id", "job")
    kw.setdefault("date", "2019-01-01T00:00:00Z")
    return run_qobj(parse_qobj(raw), get_backend(backend), **kw)


def bell(**config):
    raw = load_listing("bell_qobj.json")
    raw["config"].update(config)
    return raw


def test_bell_on_qasm_simulator():
    doc = run(bell(), "desk_qasm", seed=3).document
    assert doc.backend_name == "desk_qasm" and doc.success and doc.status == "COMPLETED"
    first, second = (r.data.counts for r in doc.results)
    assert set(first) <= {"0x0", "0x3"} and sum(first.values()) == 1000
    assert set(second) <= {"0x1", "0x2"} and sum(second.values()) == 1000


def test_result_validates_against_qobj():
    raw = bell()
    doc = run(raw, "desk_qasm", seed=3).document
    assert validate_result(doc, parse_qobj(raw)).errors == []


def test_headers_echoed():
    doc = run(bell(), "desk_qasm", seed=3).document
    assert doc.header == {"description": "Bell states"}
    assert doc.results[0].header == {"description": "|11>+|00> Bell"}


def test_missing_header_becomes_empty_object():
    raw = bell()
    del raw["header"]
    assert run(raw, "desk_qasm", seed=1).document.header == {}


def test_job_id_and_date_passthrough():
    doc = run(bell(), "desk_qasm", seed=1, job_id="abc", date="2020-02-02T00:00:00Z").document
    assert (doc.job_id, doc.date) == ("abc", "2020-02-02T00:00:00Z")


def test_seed_precedence():
    assert pick_seed(5, 9) == 5
    assert pick_seed(None, 9) == 9
    assert 0 <= pick_seed(None, None) < 2**31


def test_configured_seed_is_reported_and_reproducible():
    a = run(bell(seed=42), "desk_qasm").document
    b = run(bell(seed=42), "desk_qasm").document
    assert all(r.seed == 42 for r in a.results)
    assert dump_document("result", a) == dump_document("result", b)


def test_explicit_seed_overrides_configured():
    doc = run(bell(seed=42), "desk_qasm", seed=7).document
    assert all(r.seed == 7 for r in doc.results)


def test_different_seeds_differ():
    a = run(bell(), "desk_qasm", seed=1).document
    b = run(bell(), "desk_qasm", seed=2).document
    assert [r.data.memory for r in a.results] != [r.data.memory for r in b.results]


def test_statevector_only_for_single_shot():
    assert all(r.data.statevector is None for r in run(bell(), "desk_qasm", seed=1).document.results)
    one = run(bell(shots=1), "desk_qasm", seed=1).document
    for r in one.results:
        sv = np.array([complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in r.data.statevector])
        assert abs(np.linalg.norm(sv) - 1) < 1e-9


def test_memory_flag_false_omits_memory():
    doc = run(bell(memory=False), "desk_qasm", seed=1).document
    assert all(r.data.memory is None for r in doc.results)
    assert all(r.data.counts for r in doc.results)


def test_shot_memory_available_even_without_memory_flag():
    out = run(bell(memory=False), "desk_qasm", seed=1)
    assert [len(m) for m in out.shot_memory] == [1000, 1000]


def test_pulse_qobj_on_qasm_only_backend():
    with pytest.raises(EngineMismatch):
        run(load_listing("rabi_level2_qobj.json"), "ibmqx2", seed=1)


def test_qasm_qobj_lowered_on_pulse_backend():
    # desk_pulse has no coupling term, so only the shape of the result is fixed here
    raw = bell(shots=200)
    doc = run(raw, "desk_pulse", seed=1).document
    for r in doc.results:
        assert sum(r.data.counts.values()) == 200
        assert set(r.data.counts) <= {"0x0", "0x1", "0x2", "0x3"}
    assert validate_result(doc, parse_qobj(raw)).errors == []


@pytest.mark.parametrize("level,shape", [(0, (1, 6)), (1, (5, 1))])
def test_rabi_low_level_shapes(level, shape):
    raw = load_listing(f"rabi_level{level}_qobj.json")
    doc = run(raw, "rabi_1q", seed=1).document
    for r in doc.results:
        assert np.asarray(r.data.memory).shape == shape + (2,)
        assert r.data.counts is None
        assert r.meas_return == raw["config"]["meas_return"]
    assert validate_result(doc, parse_qobj(raw)).errors == []


def test_rabi_level2_pattern():
    raw = load_listing("rabi_level2_qobj.json")
    raw["config"]["shots"] = 1000
    counts = [r.data.counts for r in run(raw, "rabi_1q", seed=1).document.results]
    assert counts[0] == {"0x0": 1000}
    assert counts[2] == {"0x1": 1000}
    assert set(counts[1]) == {"0x0", "0x1"}


def test_rabi_level2_amplitude_zero_listing_counts():
    counts = run(load_listing("rabi_level2_qobj.json"), "rabi_1q", seed=1).document.results[0].data.counts
    assert counts == {"0x0": 5}


def test_t1_qobj_runs():
    raw = load_listing("t1_qobj.json")
    doc = run(raw, "rabi_1q", seed=1).document
    assert len(doc.results) == len(raw["experiments"])
    assert validate_result(doc, parse_qobj(raw)).errors == []


def test_noise_model_in_config_applies():
    raw = load_listing("repcode_qobj.json")
    clean = run(copy.deepcopy(raw), "desk_qasm", seed=1).document.results[0].data.counts
    raw["config"]["noise_model"] = {"type": "bit_flip", "p": 0.03, "qubits": [0, 1, 2], "after": 2}
    noisy = run(raw, "desk_qasm", seed=1).document.results[0].data.counts
    assert len(noisy) > len(clean)


def test_stop_callback_interrupts():
    class Stop(Exception):
        pass

    def stop():
        raise Stop

    with pytest.raises(Stop):
        run(bell(), "desk_qasm", seed=1, stop=stop)
