"""h_str parsing and evaluation to matrices."""

from .dsl import DslError, HTerm, dump_terms, parse_hstr, parse_term
from .evaluate import (
    ComplexScaleUnsupported, DimensionMismatch, EvaluatedHamiltonian, NonHermitianStatic,
    Subsystem, SubsystemLayout, UnboundVariable, bind_and_evaluate, duffing_hamiltonian,
    duffing_layout, duffing_term, evaluate_backend, evaluate_strings, layout_for, qubit_layout,
    u_channel_frequency,
)
