"""Wire-format data model, serialization and validation."""

from .backend import (
    BackendConfiguration, BackendProperties, BackendStatus, CmdDefEntry, GateConfig,
    HamiltonianDict, PulseDefaults, PulseLibEntry, UChannelTerm,
)
from .documents import KINDS, detect_kind, dump_document, parse_document, parse_qobj
from .hexbits import decode_hex, encode_hex
from .instructions import (
    Acquire, Barrier, Bfunc, Copy, DrivePulse, FrameChange, Gate, Instruction, Measure,
    PersistentValue, Reset, Snapshot, parse_instruction,
)
from .qobj import ExpData, Experiment, ExperimentResult, JobStatus, Qobj, ResultDocument, UserConfig
from .validate import (
    ValidationReport, Violation, validate_backend, validate_defaults, validate_qobj, validate_result,
)
from .wire import ComplexPair, ParseContext, ParseError, dumps, loads, serialize
