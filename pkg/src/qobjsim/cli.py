"""Command-line entry point: ``qobjsim <command> ...``.

Exit codes: 0 success, 1 violations or engine failure, 2 unreadable input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import Cancelled
from .hamiltonian import DslError, evaluate_backend, u_channel_frequency
from .lowering import LoweringError, lower_qobj
from .model.documents import detect_kind, parse_document
from .model.validate import (
    ValidationReport, check_pulse_library, validate_backend, validate_defaults, validate_result,
)
from .model.wire import ParseError, dumps, serialize
from .registry import Backend, UnknownBackend, resolve_backend
from .runner import run_qobj

OK, VIOLATIONS, UNREADABLE = 0, 1, 2


class _Unreadable(Exception):
    pass


def _read(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
        return json.loads(text)
    except (OSError, ValueError) as exc:
        raise _Unreadable(f"{path}: {exc}") from exc


def _backend(spec: str, defaults: str | None = None) -> Backend:
    try:
        return resolve_backend(spec, defaults)
    except (UnknownBackend, OSError, ValueError) as exc:
        raise _Unreadable(f"backend {spec}: {exc}") from exc


def _print_report(report: ValidationReport, as_json: bool):
    if as_json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        for v in report:
            print(v)


def cmd_validate(args) -> int:
    obj = _read(args.path)
    try:
        kind = args.kind or detect_kind(obj)
        doc = parse_document(kind, obj, strict=args.strict)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return UNREADABLE
    backend = _backend(args.backend, args.defaults) if args.backend else None
    report = ValidationReport()
    if kind == "qobj":
        if backend is not None:
            report = backend.check(obj, doc, strict=args.strict)
    elif kind == "backend_configuration":
        report = validate_backend(doc, backend.defaults if backend else None)
    elif kind == "backend_defaults":
        report = validate_defaults(doc, backend.configuration if backend else None)
    elif kind == "pulse_library":
        check_pulse_library(doc, "", report)
    elif kind == "result":
        report = validate_result(doc)
    _print_report(report, args.json)
    failed = report.errors or (args.strict and report.warnings)
    if not failed and not args.json:
        print(f"{args.path}: valid {kind}")
    return VIOLATIONS if failed else OK


def _load_qobj(path: str):
    obj = _read(path)
    try:
        return obj, parse_document("qobj", obj)
    except ParseError as exc:
        raise _Unreadable(f"parse error: {exc}") from exc


def _write(data: bytes, out: str | None):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8") + "\n")


def cmd_run(args) -> int:
    raw, qobj = _load_qobj(args.path)
    backend = _backend(args.backend, args.defaults)
    report = backend.check(raw, qobj)
    if not report.ok:
        _print_report(report.errors, False)
        return VIOLATIONS
    try:
        out = run_qobj(qobj, backend, seed=args.seed, job_id=args.job_id, date=args.date)
    except (ValueError, LoweringError, DslError, Cancelled) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return VIOLATIONS
    _write(serialize(out.document), args.out)
    return OK


def cmd_lower(args) -> int:
    _, qobj = _load_qobj(args.path)
    backend = _backend(args.backend, args.defaults)
    if backend.defaults is None:
        print(f"backend {backend.name} has no cmd_def", file=sys.stderr)
        return VIOLATIONS
    try:
        lowered = lower_qobj(qobj, backend.defaults, backend.configuration)
    except LoweringError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return VIOLATIONS
    print(dumps(lowered, indent=2))
    return OK


def describe(backend: Backend) -> dict:
    """Channels, LOs, Hamiltonian terms and measurement options of a backend."""
    cfg, defaults = backend.configuration, backend.defaults
    qubit_lo = list(defaults.qubit_freq_est) if defaults else []
    meas_lo = list(defaults.meas_freq_est) if defaults else []
    channels = []
    for q in range(cfg.n_qubits):
        channels.append({"channel": f"d{q}", "lo_ghz": qubit_lo[q] if q < len(qubit_lo) else None})
        channels.append({"channel": f"m{q}", "lo_ghz": meas_lo[q] if q < len(meas_lo) else None})
    for k, spec in enumerate(cfg.u_channel_lo or ()):
        try:
            lo = u_channel_frequency(spec, qubit_lo) if qubit_lo else None
        except (ValueError, IndexError):
            lo = None
        terms = " + ".join(f"({t.scale.re}{t.scale.im:+}j)*q{t.q}" for t in spec)
        channels.append({"channel": f"u{k}", "lo_ghz": lo, "formula": terms})
    ham = cfg.hamiltonian
    info = {
        "backend_name": cfg.backend_name,
        "n_qubits": cfg.n_qubits,
        "open_pulse": bool(cfg.open_pulse),
        "n_uchannels": cfg.n_uchannels or 0,
        "meas_levels": list(cfg.meas_levels or ()),
        "channels": channels if cfg.open_pulse else [],
        "hamiltonian_terms": list(ham.terms) if ham else [],
        "meas_kernels": list(cfg.meas_kernels or ()),
        "discriminators": list(cfg.discriminators or ()),
        "basis_gates": list(cfg.basis_gates or ()),
    }
    if ham is not None and ham.terms:
        try:
            info["hilbert_dims"] = list(evaluate_backend(cfg).layout.dims)
        except (DslError, ValueError) as exc:
            info["hamiltonian_error"] = str(exc)
    return info


def cmd_describe(args) -> int:
    info = describe(_backend(args.backend))
    if args.json:
        print(json.dumps(info, indent=2))
        return OK
    for key in ("backend_name", "n_qubits", "open_pulse", "n_uchannels", "meas_levels", "basis_gates",
                "meas_kernels", "discriminators", "hilbert_dims", "hamiltonian_error"):
        if key in info:
            print(f"{key:<18} {info[key]}")
    if info["channels"]:
        print("channels")
        for ch in info["channels"]:
            lo = "-" if ch["lo_ghz"] is None else f"{ch['lo_ghz']:.6g} GHz"
            print(f"  {ch['channel']:<6} {lo:<14} {ch.get('formula', '')}".rstrip())
    if info["hamiltonian_terms"]:
        print("hamiltonian terms")
        for t in info["hamiltonian_terms"]:
            print(f"  {t}")
    return OK


def memory_rows(result: dict):
    """CSV rows (experiment, shot, slot, sample, i, q) for level-0/1 memory; shot/sample blank when absent."""
    for e, res in enumerate(result.get("results", [])):
        mem = res.get("data", {}).get("memory")
        if not mem or isinstance(mem[0], str):
            continue
        depth, node = 0, mem
        while isinstance(node, list):
            depth, node = depth + 1, node[0] if node else None
        single = res.get("meas_return") == "single"
        if depth == 2:
            shaped = [[[z] for z in mem]]
            per_shot, per_sample = False, False
        elif depth == 3 and single:
            shaped = [[[z] for z in shot] for shot in mem]
            per_shot, per_sample = True, False
        elif depth == 3:
            shaped = [mem]
            per_shot, per_sample = False, True
        else:
            shaped = mem
            per_shot, per_sample = True, True
        for s, shot in enumerate(shaped):
            for slot, samples in enumerate(shot):
                for k, (i, q) in enumerate(samples):
                    yield [e, s if per_shot else "", slot, k if per_sample else "", i, q]


def cmd_export_csv(args) -> int:
    result = _read(args.path)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["experiment", "shot", "slot", "sample", "i", "q"])
        for row in memory_rows(result):
            w.writerow(row)
    finally:
        if args.out:
            fh.close()
    return OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.host, args.port, args.data_dir)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qobjsim", description="Qobj validator, simulators and job service")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a JSON document")
    v.add_argument("path")
    v.add_argument("--backend", help="built-in backend name or bundle/configuration file")
    v.add_argument("--defaults", help="backend defaults file overriding the bundle's")
    v.add_argument("--kind", help="document kind when detection is ambiguous")
    v.add_argument("--strict", action="store_true", help="reject unknown keys and fail on warnings")
    v.add_argument("--json", action="store_true", help="print the report as JSON")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="execute a Qobj locally")
    r.add_argument("path")
    r.add_argument("--backend", required=True)
    r.add_argument("--defaults")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--job-id")
    r.add_argument("--date", help="ISO 8601 timestamp recorded in the result")
    r.set_defaults(func=cmd_run)

    lo = sub.add_parser("lower", help="compile a QASM Qobj to PULSE using the backend cmd_def")
    lo.add_argument("path")
    lo.add_argument("--backend", required=True)
    lo.add_argument("--defaults")
    lo.set_defaults(func=cmd_lower)

    d = sub.add_parser("describe", help="summarize a backend")
    d.add_argument("backend")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_describe)

    x = sub.add_parser("export-csv", help="write level-0/1 memory from a result as CSV")
    x.add_argument("path")
    x.add_argument("--out")
    x.set_defaults(func=cmd_export_csv)

    s = sub.add_parser("serve", help="run the HTTP job service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int)
    s.add_argument("--data-dir")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Unreadable as exc:
        print(str(exc), file=sys.stderr)
        return UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
