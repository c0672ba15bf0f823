"""Gate-level statevector engine."""

from .engine import (
    BitFlipNoise, ConditionalUnsupported, ExperimentOutcome, NonUnitaryInstruction,
    RegisterOutOfRange, experiment_width, run_experiment, run_unitary,
)
from .gates import ArityMismatch, UnknownGate, gate_matrix, u_matrix
from .qasmdef import DefError, QasmDef, parse_qasm_def


def backend_defs(cfg) -> dict:
    """Parsed ``qasm_def`` for every gate a configuration offers."""
    return {g.name: parse_qasm_def(g.qasm_def) for g in cfg.gates}
