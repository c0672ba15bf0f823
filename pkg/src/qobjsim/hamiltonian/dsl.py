"""Recursive-descent parser for h_str Hamiltonian terms.

Grammar (underscores count as whitespace)::

    term    := sum
    sum     := ['+'|'-'] product (('+'|'-') product)*
    product := unary (('*' | '/' | '||')? unary)*      juxtaposition multiplies
    unary   := ('+'|'-') unary | atom
    atom    := NUMBER | 'pi' | NAME ['{' index '}'] | FUNC '(' sum ')'
             | '(' sum ')' | 'SUM' '[' NAME ',' bound ',' bound ',' sum ']'
    index   := INT | NAME
    bound   := INT | 'N' | NAME

``N`` as a bound is ``n_qubits - 1``. A braced name is an operator
(X Y Z Sp Sm O a A N), a channel (D U M) or an indexed variable (``g{i}``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

OPERATORS = ("X", "Y", "Z", "Sp", "Sm", "O", "a", "A", "N")
CHANNELS = {"D": "d", "U": "u", "M": "m"}
FUNCTIONS = ("sqrt", "abs", "cos", "sin", "exp")
BARE_CHANNEL_RE = re.compile(r"^([DUM])(\d+)$")


class DslError(ValueError):
    """Syntax or binding error, with a 0-based column into the term text."""

    def __init__(self, message: str, column: int | None = None, expected=(), text: str | None = None):
        where = f" at column {column}" if column is not None else ""
        exp = f" (expected {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message}{where}{exp}")
        self.message = message
        self.column = column
        self.expected = frozenset(expected)
        self.text = text


class Node:
    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float

    def to_json(self):
        return {"node": "const", "value": self.value}


@dataclass(frozen=True)
class Var(Node):
    name: str
    index: int | str | None = None

    def to_json(self):
        return {"node": "var", "name": self.name, "index": self.index}


@dataclass(frozen=True)
class ChannelRef(Node):
    prefix: str
    index: int | str

    def to_json(self):
        return {"node": "channel", "prefix": self.prefix, "index": self.index}


@dataclass(frozen=True)
class Operator(Node):
    """``index`` None means the unique oscillator (bare ``a``/``A``)."""

    kind: str
    index: int | str | None

    def to_json(self):
        return {"node": "operator", "kind": self.kind, "index": self.index}


@dataclass(frozen=True)
class Product(Node):
    factors: tuple

    def to_json(self):
        return {"node": "product", "factors": [f.to_json() for f in self.factors]}


@dataclass(frozen=True)
class Sum(Node):
    terms: tuple

    def to_json(self):
        return {"node": "sum", "terms": [t.to_json() for t in self.terms]}


@dataclass(frozen=True)
class SumMacro(Node):
    var: str
    lo: int | str
    hi: int | str
    body: Node

    def to_json(self):
        return {"node": "SUM", "var": self.var, "lo": self.lo, "hi": self.hi, "body": self.body.to_json()}


@dataclass(frozen=True)
class Nonlinear(Node):
    """``func`` is one of FUNCTIONS or ``"div"`` (args: numerator, denominator)."""

    func: str
    args: tuple

    def to_json(self):
        return {"node": "nonlinear", "func": self.func, "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True)
class HTerm:
    text: str
    tree: Node = field(compare=False)

    def to_json(self):
        return {"text": self.text, "tree": self.tree.to_json()}


_TOKEN_RE = re.compile(
    r"(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<op>\|\||[-+*/(){}\[\],])"
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos] in " _\t":
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise DslError(f"unexpected character {text[pos]!r}", pos, text=text)
        kind = m.lastgroup
        out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, expected):
        kind, val, pos = self.tok
        what = "end of term" if kind == "end" else repr(val)
        raise DslError(f"unexpected {what}", pos, expected, self.text)

    def take(self, value):
        if self.tok[1] != value or self.tok[0] == "end":
            self.fail({repr(value)})
        self.i += 1

    def parse(self) -> Node:
        node = self.sum()
        if self.tok[0] != "end":
            self.fail({"'+'", "'-'", "'*'", "'/'", "'||'", "end of term"})
        return node

    def sum(self) -> Node:
        terms = [self.signed_product()]
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            terms.append(self.signed_product())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def signed_product(self) -> Node:
        if self.tok[1] in ("+", "-") and self.tok[0] == "op":
            neg = self.tok[1] == "-"
            self.i += 1
            node = self.product()
            return _mul([Const(-1.0), node]) if neg else node
        return self.product()

    def _starts_atom(self) -> bool:
        kind, val, _ = self.tok
        return kind in ("num", "name") or (kind == "op" and val == "(")

    def product(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.tok
            if kind == "op" and val in ("*", "||"):
                self.i += 1
                node = _mul([node, self.unary()])
            elif kind == "op" and val == "/":
                self.i += 1
                node = Nonlinear("div", (node, self.unary()))
            elif self._starts_atom():
                node = _mul([node, self.unary()])
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.tok
        if kind == "op" and val in ("+", "-"):
            self.i += 1
            node = self.unary()
            return _mul([Const(-1.0), node]) if val == "-" else node
        return self.atom()

    def atom(self) -> Node:
        kind, val, pos = self.tok
        if kind == "num":
            self.i += 1
            return Const(float(val))
        if kind == "op" and val == "(":
            self.i += 1
            node = self.sum()
            self.take(")")
            return node
        if kind != "name":
            self.fail({"number", "name", "'('"})
        self.i += 1
        if val == "pi":
            return Const(math.pi)
        if val == "SUM":
            return self.sum_macro()
        if val in FUNCTIONS:
            self.take("(")
            arg = self.sum()
            self.take(")")
            return Nonlinear(val, (arg,))
        if self.tok[1] == "{" and self.tok[0] == "op":
            self.i += 1
            index = self.index()
            self.take("}")
            if val in OPERATORS:
                return Operator(val, index)
            if val in CHANNELS:
                return ChannelRef(val, index)
            return Var(val, index)
        m = BARE_CHANNEL_RE.match(val)
        if m:
            return ChannelRef(m.group(1), int(m.group(2)))
        if val in ("a", "A"):
            return Operator(val, None)
        if val in OPERATORS and val != "N":
            raise DslError(f"operator {val} needs a subsystem index", pos, {"'{'"}, self.text)
        return Var(val)

    def index(self):
        kind, val, _ = self.tok
        if kind == "num" and val.isdigit():
            self.i += 1
            return int(val)
        if kind == "name":
            self.i += 1
            return val
        self.fail({"integer", "index name"})

    def sum_macro(self) -> Node:
        self.take("[")
        kind, var, _ = self.tok
        if kind != "name":
            self.fail({"index name"})
        self.i += 1
        self.take(",")
        lo = self.index()
        self.take(",")
        hi = self.index()
        self.take(",")
        body = self.sum()
        self.take("]")
        return SumMacro(var, lo, hi, body)


def _mul(factors) -> Node:
    flat = []
    for f in factors:
        flat.extend(f.factors if isinstance(f, Product) else (f,))
    consts = [f for f in flat if isinstance(f, Const)]
    if len(consts) > 1:
        value = math.prod(c.value for c in consts)
        first = flat.index(consts[0])
        rest = [f for f in flat if not isinstance(f, Const)]
        rest.insert(min(first, len(rest)), Const(value))
        flat = rest
    return flat[0] if len(flat) == 1 else Product(tuple(flat))


def parse_term(text: str) -> HTerm:
    return HTerm(text, _Parser(text).parse())


def parse_hstr(terms) -> list[HTerm]:
    """Parse every term; the first failure raises with its term index in the message."""
    out = []
    for k, text in enumerate(terms):
        try:
            out.append(parse_term(text))
        except DslError as e:
            raise DslError(f"term {k}: {e.message}", e.column, e.expected, text) from None
    return out


def dump_terms(terms: list[HTerm]) -> list[dict]:
    """JSON-ready debug view of parsed terms."""
    return [t.to_json() for t in terms]
