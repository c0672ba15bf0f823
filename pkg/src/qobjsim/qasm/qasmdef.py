"""Parser for the restricted ``qasm_def`` bodies carried in gate configurations.

Only ``U(e1,e2,e3) q;`` and ``CX a,b;`` statements are accepted, with
expressions over the gate's parameters, real literals, ``pi`` and ``+ - * /``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass


class DefError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Stmt:
    op: str
    exprs: tuple
    qargs: tuple


@dataclass(frozen=True)
class QasmDef:
    name: str
    params: tuple
    args: tuple
    body: tuple

    def bind(self, values) -> dict:
        return dict(zip(self.params, values))


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/(){},;]))"
)


def _tokenize(src: str):
    toks, pos = [], 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m or m.end() == pos:
            if src[pos:].strip() == "":
                break
            raise DefError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup is None:
            break
        toks.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def expect(self, value=None, kind=None):
        k, v, pos = self.tok
        if (value is not None and v != value) or (kind is not None and k != kind) or k == "end":
            want = value or kind
            raise DefError(f"expected {want!r}, found {v or 'end of input'!r}", pos)
        self.i += 1
        return v

    def names(self, closer):
        out = [self.expect(kind="name")]
        while self.tok[1] == ",":
            self.i += 1
            out.append(self.expect(kind="name"))
        if closer:
            self.expect(closer)
        return tuple(out)

    def definition(self) -> QasmDef:
        if self.expect(kind="name") != "gate":
            raise DefError("definition must start with 'gate'", 0)
        name = self.expect(kind="name")
        params = ()
        if self.tok[1] == "(":
            self.i += 1
            params = () if self.tok[1] == ")" else self.names(None)
            self.expect(")")
        args = self.names(None)
        self.expect("{")
        body = []
        while self.tok[1] != "}":
            body.append(self.statement(params, args))
        self.expect("}")
        if self.tok[0] != "end":
            raise DefError("trailing input after '}'", self.tok[2])
        return QasmDef(name, params, args, tuple(body))

    def statement(self, params, args) -> Stmt:
        k, op, pos = self.tok
        self.expect(kind="name")
        if op == "U":
            self.expect("(")
            exprs = [self.expr(params)]
            for _ in range(2):
                self.expect(",")
                exprs.append(self.expr(params))
            self.expect(")")
            qargs = self.names(";")
            want = 1
        elif op == "CX":
            qargs = self.names(";")
            exprs = []
            want = 2
        else:
            raise DefError(f"only U and CX statements are allowed, found {op!r}", pos)
        if len(qargs) != want:
            raise DefError(f"{op} takes {want} qubit argument(s)", pos)
        for q in qargs:
            if q not in args:
                raise DefError(f"unknown qubit argument {q!r}", pos)
        return Stmt(op, tuple(exprs), qargs)

    def expr(self, params):
        node = self.term(params)
        while self.tok[1] in ("+", "-"):
            op = self.tok[1]
            self.i += 1
            node = (op, node, self.term(params))
        return node

    def term(self, params):
        node = self.factor(params)
        while self.tok[1] in ("*", "/"):
            op = self.tok[1]
            self.i += 1
            node = (op, node, self.factor(params))
        return node

    def factor(self, params):
        k, v, pos = self.tok
        if v == "-":
            self.i += 1
            return ("neg", self.factor(params))
        if v == "+":
            self.i += 1
            return self.factor(params)
        if v == "(":
            self.i += 1
            node = self.expr(params)
            self.expect(")")
            return node
        if k == "num":
            self.i += 1
            return ("num", float(v))
        if k == "name":
            self.i += 1
            if v == "pi":
                return ("num", math.pi)
            if v not in params:
                raise DefError(f"unknown parameter {v!r}", pos)
            return ("param", v)
        raise DefError(f"expected expression, found {v or 'end of input'!r}", pos)


def parse_qasm_def(src: str) -> QasmDef:
    return _Parser(src).definition()


def eval_expr(node, env: dict) -> float:
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "param":
        return env[node[1]]
    if tag == "neg":
        return -eval_expr(node[1], env)
    a, b = eval_expr(node[1], env), eval_expr(node[2], env)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    return a / b
