"""Backend bundles: configuration, defaults, properties, schema and simulator settings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .model.backend import BackendConfiguration, BackendProperties, PulseDefaults
from .model.documents import detect_kind, parse_document
from .model.qobj import Qobj
from .model.validate import ValidationReport, validate_qobj
from .model.wire import pointer


class UnknownBackend(KeyError):
    pass


@dataclass
class Backend:
    name: str
    configuration: BackendConfiguration
    defaults: PulseDefaults | None = None
    properties: BackendProperties | None = None
    status: dict = field(default_factory=dict)
    schema: dict = field(default_factory=dict)
    simulator: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def engine(self) -> str:
        return self.simulator.get("engine", "pulse" if self.configuration.open_pulse else "qasm")

    def check(self, raw_qobj: dict, qobj: Qobj, strict: bool = False) -> ValidationReport:
        """Generic qobj rules plus the bundle's own JSON-schema constraints."""
        report = validate_qobj(qobj, self.configuration, self.defaults, strict=strict)
        if self.schema:
            for err in jsonschema.Draft202012Validator(self.schema).iter_errors(raw_qobj):
                path = ""
                for part in err.absolute_path:
                    path = pointer(path, part)
                report.add(path, f"backend schema: {err.message}")
        return report


def bundle_from_json(obj: dict, name: str | None = None) -> Backend:
    """A bundle document, or a bare backend configuration."""
    if "configuration" not in obj:
        if detect_kind(obj) != "backend_configuration":
            raise ValueError("expected a backend bundle or a backend configuration")
        obj = {"configuration": obj}
    cfg = parse_document("backend_configuration", obj["configuration"])
    defaults = parse_document("backend_defaults", obj["defaults"]) if obj.get("defaults") else None
    props = parse_document("backend_properties", obj["properties"]) if obj.get("properties") else None
    status = obj.get("status") or {"backend_name": cfg.backend_name, "backend_version": cfg.backend_version,
                                   "operational": True, "pending_jobs": 0, "status_msg": "active"}
    return Backend(name or cfg.backend_name, cfg, defaults, props, dict(status), obj.get("schema") or {},
                   obj.get("simulator") or {}, obj)


def builtin_names() -> list[str]:
    root = resources.files("qobjsim") / "backends"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


@lru_cache(maxsize=None)
def get_backend(name: str) -> Backend:
    path = resources.files("qobjsim") / "backends" / f"{name}.json"
    if not path.is_file():
        raise UnknownBackend(name)
    return bundle_from_json(json.loads(path.read_text(encoding="utf-8")), name)


def resolve_backend(spec: str, defaults_path: str | None = None) -> Backend:
    """A built-in name or a path to a bundle/configuration file."""
    p = Path(spec)
    if p.suffix == ".json" or p.exists():
        backend = bundle_from_json(json.loads(p.read_text(encoding="utf-8")))
    else:
        backend = get_backend(spec)
    if defaults_path is not None:
        obj = json.loads(Path(defaults_path).read_text(encoding="utf-8"))
        backend = Backend(backend.name, backend.configuration, parse_document("backend_defaults", obj),
                          backend.properties, backend.status, backend.schema, backend.simulator, backend.raw)
    return backend
