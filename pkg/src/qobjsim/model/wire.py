"""Field kinds and the base class shared by every wire-format model.

Each model is a frozen keyword-only dataclass whose fields carry a ``kind`` in
their metadata. ``WireModel.from_json`` walks those fields, ``to_json`` emits
them back in the order they were read, and unknown keys survive the trip in
``extra``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, ClassVar

log = logging.getLogger(__name__)

HEX_RE = re.compile(r"^0[xX][0-9a-fA-F]+$")
TOKEN_RE = re.compile(r"^-?[pP](\d+)$")


class ParseError(ValueError):
    """Raised when a document does not match its wire shape."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path or '/'}: {reason}")
        self.path = path
        self.reason = reason


def pointer(path: str, key) -> str:
    k = str(key).replace("~", "~0").replace("/", "~1")
    return f"{path}/{k}"


def resolve_pointer(doc, path: str):
    """Return the node at JSON pointer ``path``; raises KeyError/IndexError if absent."""
    node = doc
    if not path:
        return node
    for raw in path.split("/")[1:]:
        key = raw.replace("~1", "/").replace("~0", "~")
        if isinstance(node, list):
            node = node[int(key)]
        else:
            node = node[key]
    return node


@dataclass
class ParseContext:
    strict: bool = False
    warnings: list = field(default_factory=list)

    def unknown(self, path: str, key: str):
        where = pointer(path, key)
        if self.strict:
            raise ParseError(where, "unknown field")
        self.warnings.append(where)
        log.warning("unknown field preserved at %s", where)


def is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def parse_date(s: str) -> datetime:
    """ISO 8601 with either a ``T`` or a space separator and an optional ``Z``."""
    text = s.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


class Kind:
    """How one field value is checked on the way in and emitted on the way out."""

    def parse(self, v, path: str, ctx: ParseContext):
        raise NotImplementedError

    def dump(self, v):
        return v


class Opaque(Kind):
    def parse(self, v, path, ctx):
        return v


class Str(Kind):
    def parse(self, v, path, ctx):
        if not isinstance(v, str):
            raise ParseError(path, "expected string")
        return v


class Bool(Kind):
    def parse(self, v, path, ctx):
        if not isinstance(v, bool):
            raise ParseError(path, "expected boolean")
        return v


class Int(Kind):
    def __init__(self, minimum: int | None = None):
        self.minimum = minimum

    def parse(self, v, path, ctx):
        if not is_int(v):
            raise ParseError(path, "expected integer")
        if self.minimum is not None and v < self.minimum:
            raise ParseError(path, f"must be >= {self.minimum}")
        return v


class Real(Kind):
    def parse(self, v, path, ctx):
        if not is_real(v):
            raise ParseError(path, "expected number")
        if not math.isfinite(v):
            raise ParseError(path, "expected finite number")
        return v


class RealOrToken(Kind):
    """A number, or a cmd_def parameter token such as ``"P0"`` / ``"p1"``."""

    def parse(self, v, path, ctx):
        if is_real(v):
            return v
        if isinstance(v, str) and TOKEN_RE.match(v):
            return v
        raise ParseError(path, "expected number or parameter token")


class Enum(Kind):
    def __init__(self, *values):
        self.values = values

    def parse(self, v, path, ctx):
        if v not in self.values:
            raise ParseError(path, f"expected one of {list(self.values)}")
        return v


class Date(Kind):
    def parse(self, v, path, ctx):
        if not isinstance(v, str):
            raise ParseError(path, "expected ISO 8601 string")
        try:
            parse_date(v)
        except ValueError:
            raise ParseError(path, "not an ISO 8601 date-time") from None
        return v


class Hex(Kind):
    def parse(self, v, path, ctx):
        if not isinstance(v, str) or not HEX_RE.match(v):
            raise ParseError(path, "expected hex string like 0x1F")
        return v


class ListOf(Kind):
    def __init__(self, item: Kind):
        self.item = item

    def parse(self, v, path, ctx):
        if not isinstance(v, list):
            raise ParseError(path, "expected array")
        return tuple(self.item.parse(x, pointer(path, i), ctx) for i, x in enumerate(v))

    def dump(self, v):
        return [self.item.dump(x) for x in v]


class MapOf(Kind):
    def __init__(self, item: Kind):
        self.item = item

    def parse(self, v, path, ctx):
        if not isinstance(v, dict):
            raise ParseError(path, "expected object")
        return {k: self.item.parse(x, pointer(path, k), ctx) for k, x in v.items()}

    def dump(self, v):
        return {k: self.item.dump(x) for k, x in v.items()}


class Model(Kind):
    def __init__(self, cls):
        self.cls = cls

    def parse(self, v, path, ctx):
        return self.cls.from_json(v, path, ctx)

    def dump(self, v):
        return v.to_json()


@dataclass(frozen=True)
class ComplexPair:
    """A complex number carried on the wire as ``[re, im]``."""

    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def to_json(self):
        return [self.re, self.im]

    @classmethod
    def of(cls, z: complex) -> ComplexPair:
        return cls(float(z.real), float(z.imag))


class Pair(Kind):
    def __init__(self, tokens: bool = False):
        self.num = RealOrToken() if tokens else Real()

    def parse(self, v, path, ctx):
        if not isinstance(v, list) or len(v) != 2:
            raise ParseError(path, "expected [re, im] pair")
        return ComplexPair(self.num.parse(v[0], pointer(path, 0), ctx),
                           self.num.parse(v[1], pointer(path, 1), ctx))

    def dump(self, v):
        return v.to_json()


OPAQUE, STR, BOOL, INT, REAL = Opaque(), Str(), Bool(), Int(), Real()


def wire(kind: Kind, required: bool = True, key: str | None = None):
    meta = {"kind": kind, "key": key}
    if required:
        return field(metadata=meta)
    return field(default=None, metadata=meta)


def _wire_fields(cls):
    return [f for f in dataclasses.fields(cls) if "kind" in f.metadata]


@dataclass(frozen=True, kw_only=True)
class WireModel:
    """Base for JSON-backed records with lenient/strict unknown-key handling."""

    extra: dict = field(default_factory=dict)
    key_order: tuple = field(default=(), compare=False, repr=False)

    LABEL: ClassVar[str] = "object"

    @classmethod
    def from_json(cls, obj, path: str = "", ctx: ParseContext | None = None):
        ctx = ctx or ParseContext()
        if not isinstance(obj, dict):
            raise ParseError(path, f"expected {cls.LABEL} object")
        values, seen = {}, set()
        for f in _wire_fields(cls):
            key = f.metadata["key"] or f.name
            seen.add(key)
            if key in obj and obj[key] is not None:
                values[f.name] = f.metadata["kind"].parse(obj[key], pointer(path, key), ctx)
            elif f.default is dataclasses.MISSING:
                raise ParseError(pointer(path, key), "missing required field")
        extra = {}
        for k, v in obj.items():
            if k not in seen:
                ctx.unknown(path, k)
                extra[k] = v
        inst = cls(extra=extra, key_order=tuple(obj.keys()), **values)
        inst._check(path)
        return inst

    def _check(self, path: str):
        """Per-type shape checks that need more than one field."""

    def to_json(self) -> dict:
        dumped = {}
        for f in _wire_fields(type(self)):
            v = getattr(self, f.name)
            if v is not None:
                dumped[f.metadata["key"] or f.name] = f.metadata["kind"].dump(v)
        out = {}
        for k in self.key_order:
            if k in dumped:
                out[k] = dumped.pop(k)
            elif k in self.extra:
                out[k] = self.extra[k]
        out.update(dumped)
        for k, v in self.extra.items():
            out.setdefault(k, v)
        return out

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def to_jsonable(x):
    if isinstance(x, (WireModel, ComplexPair)):
        return x.to_json()
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: to_jsonable(v) for k, v in x.items()}
    return x


def dumps(x, indent: int | None = None) -> str:
    """Canonical text form used for files and HTTP bodies alike."""
    return json.dumps(to_jsonable(x), indent=indent, ensure_ascii=False, allow_nan=False)


def serialize(x) -> bytes:
    return dumps(x).encode("utf-8")


def loads(data: bytes | str):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        return json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError("", f"invalid JSON: {e.msg} at line {e.lineno} column {e.colno}") from None
