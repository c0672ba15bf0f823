import json
from pathlib import Path

import numpy as np
import pytest

from qobjsim.model.wire import resolve_pointer

LISTINGS = Path(__file__).parent / "fixtures" / "listings"


def load_listing(name: str):
    return json.loads((LISTINGS / name).read_text(encoding="utf-8"))


def manifest() -> list[dict]:
    return load_listing("manifest.json")


def manifest_entry_value(entry: dict):
    return resolve_pointer(load_listing(entry["file"]), entry.get("pointer", ""))


def phase_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized vectors; insensitive to global phase."""
    return float(abs(np.vdot(a, b)) ** 2)


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float) -> bool:
    k = np.unravel_index(np.argmax(abs(v)), v.shape)
    if abs(u[k]) < tol:
        return False
    return bool(np.allclose(u * (v[k] / u[k]), v, atol=tol, rtol=0))


@pytest.fixture
def listing():
    return load_listing


def lowered_vs_qasm(instructions: list, backend_name: str = "desk_pulse"):
    """(qasm statevector, frame-corrected pulse state) for a 1-qubit gate list on qubit 0.

    The pulse state is restricted to the q1=|0> subspace and multiplied by
    diag(1, e^{i phi}), phi being the accumulated d0 frame phase.
    """
    from qobjsim.hamiltonian import evaluate_backend
    from qobjsim.lowering import lower_experiment
    from qobjsim.model import parse_document
    from qobjsim.pulse import PulseSettings, RotatingModel, run_pulse_experiment
    from qobjsim.qasm import run_experiment
    from qobjsim.registry import get_backend
    from qobjsim.runner import lo_map

    b = get_backend(backend_name)
    cfg, defaults = b.configuration, b.defaults
    exp = parse_document("experiment", {"instructions": instructions})
    qasm = run_experiment(exp, n_qubits=1, shots=1, memory_slots=0).statevector
    library = {e.name: e for e in defaults.pulse_library}
    lowered = lower_experiment(exp, defaults, library, cfg)
    ham = evaluate_backend(cfg)
    config = parse_document("user_config", {})
    model = RotatingModel(ham, lo_map(b, config, ham.drives), b.simulator["drive_scale"], cfg.dt)
    settings = PulseSettings(model=model, library={k: e.array() for k, e in library.items()}, dt=cfg.dt, dtm=cfg.dtm)
    out = run_pulse_experiment(lowered.instructions, settings, shots=1)
    phi = out.frame_phases.get("d0", 0.0)
    pulse = np.array([out.final_state[0], out.final_state[1] * np.exp(1j * phi)])
    return qasm, pulse


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
