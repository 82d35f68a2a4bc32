"""OpenQASM 2.0 subset reader and writer.

Supported: the ``OPENQASM 2.0`` header, ``include "qelib1.inc"`` (built in),
``qreg``/``creg`` declarations, the gate library with the usual qelib1
aliases, constant angle expressions, ``barrier`` (ignored) and trailing
``measure`` statements (ignored with a warning).  Registers are flattened in
declaration order; ``q[0]`` of the first register is the least significant
bit.

Gate names made of a run of ``c`` prefixes in front of a library gate (for
example ``ccz`` or ``cccx``) are read as that many controls, so any circuit
the writer produces can be read back.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .circuit import GATE_ARITY, Circuit, Gate
from .errors import CircuitError


@dataclass(frozen=True)
class SourceDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class QasmError(ValueError):
    """Parsing failed; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics: list[SourceDiagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == "error"] or diagnostics
        super().__init__("; ".join(str(d) for d in errors[:5]))


class _Abort(Exception):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+|\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eq>==)
  | (?P<sym>[;,()\[\]{}+\-*/^])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


# name -> (library kind, extra controls); qubit operands list controls first
_ALIASES = {
    "id": ("i", 0),
    "u1": ("p", 0), "u": ("u3", 0), "U": ("u3", 0),
    "CX": ("x", 1), "cx": ("x", 1), "ccx": ("x", 2), "c3x": ("x", 3), "c4x": ("x", 4),
    "cu1": ("p", 1), "cp": ("p", 1), "cphase": ("p", 1), "cu3": ("u3", 1),
    "cswap": ("swap", 1), "fredkin": ("swap", 1), "toffoli": ("x", 2),
    "c3sqrtx": ("sx", 3),
}

_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt, "asin": math.asin, "acos": math.acos,
          "atan": math.atan}


def resolve_gate_name(name: str) -> tuple[str, int] | None:
    """Map a QASM gate name to ``(library kind, number of controls)``."""
    alias = _ALIASES.get(name)
    if alias is not None:
        return alias
    if name in GATE_ARITY:
        return name, 0
    k = 0
    while k < len(name) and name[k] == "c":
        k += 1
        rest = name[k:]
        if rest in GATE_ARITY:
            return rest, k
        alias = _ALIASES.get(rest)
        if alias is not None:
            return alias[0], alias[1] + k
    return None


class Parser:
    """Recursive-descent parser; collects diagnostics instead of raising."""

    MAX_DIAGNOSTICS = 50

    def __init__(self, text: str | bytes, name: str = ""):
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
        self.text = text
        self.name = name
        self.diagnostics: list[SourceDiagnostic] = []
        self.toks: list[_Tok] = []
        self.pos = 0
        self.regs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, int] = {}
        self.nqubits = 0
        self.gates: list[Gate] = []
        self.measured = False

    # -- diagnostics --------------------------------------------------------

    def _diag(self, tok: _Tok | None, msg: str, severity: str = "error") -> None:
        line, col = (tok.line, tok.col) if tok is not None else self._eof_pos()
        self.diagnostics.append(SourceDiagnostic(line, col, msg, severity))
        if len(self.diagnostics) >= self.MAX_DIAGNOSTICS:
            raise _Abort

    def _eof_pos(self):
        lines = self.text.split("\n")
        return len(lines), len(lines[-1]) + 1

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    # -- lexing -------------------------------------------------------------

    def _lex(self) -> None:
        line, start, i, text = 1, 0, 0, self.text
        while i < len(text):
            m = _TOKEN.match(text, i)
            if m is None:
                self._diag(_Tok("bad", text[i], line, i - start + 1),
                           f"unexpected character {text[i]!r}")
                i += 1
                continue
            kind = m.lastgroup
            if kind == "ws":
                if m.group() == "\n":
                    line += 1
                    start = m.end()
            elif kind != "comment":
                self.toks.append(_Tok(kind, m.group(), line, i - start + 1))
            i = m.end()

    # -- token helpers ----------------------------------------------------------

    def _peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def _next(self) -> _Tok:
        tok = self._peek()
        if tok is None:
            self._diag(None, "unexpected end of input")
            raise _Abort
        self.pos += 1
        return tok

    def _expect(self, text: str) -> _Tok:
        tok = self._peek()
        if tok is None or tok.text != text:
            self._diag(tok, f"expected {text!r}, found {tok.text!r}" if tok
                       else f"expected {text!r} at end of input")
            raise _Abort
        self.pos += 1
        return tok

    def _expect_kind(self, kind: str, what: str) -> _Tok:
        tok = self._peek()
        if tok is None or tok.kind != kind:
            self._diag(tok, f"expected {what}, found {tok.text!r}" if tok
                       else f"expected {what} at end of input")
            raise _Abort
        self.pos += 1
        return tok

    def _skip_statement(self) -> None:
        while self.pos < len(self.toks):
            tok = self.toks[self.pos]
            self.pos += 1
            if tok.text in (";", "}"):
                return

    # -- grammar --------------------------------------------------------------

    def parse(self) -> Circuit | None:
        """Parse the whole text; returns ``None`` when errors were reported."""
        try:
            self._lex()
            self._program()
        except _Abort:
            pass
        except RecursionError:
            tok = self._peek()
            line, col = (tok.line, tok.col) if tok is not None else self._eof_pos()
            self.diagnostics.append(
                SourceDiagnostic(line, col, "expression nested too deeply"))
        if not self.ok:
            return None
        if self.nqubits == 0:
            self._diag(None, "no qreg declared")
            return None
        try:
            return Circuit(self.nqubits, tuple(self.gates), self.name)
        except CircuitError as exc:
            self._diag(None, str(exc))
            return None

    def _program(self) -> None:
        tok = self._peek()
        if tok is not None and tok.text == "OPENQASM":
            self.pos += 1
            ver = self._next()
            if ver.text not in ("2.0", "2"):
                self._diag(ver, f"unsupported OpenQASM version {ver.text}")
            self._expect(";")
        while self._peek() is not None:
            start = self.pos
            try:
                self._statement()
            except _StatementHandled:
                pass
            except _StatementError:
                self.pos = start
                self._skip_statement()

    def _statement(self) -> None:
        tok = self._next()
        word = tok.text
        if tok.kind != "id":
            self._fail(tok, f"unexpected {word!r}")
        if word == "include":
            inc = self._expect_kind("string", "file name")
            if inc.text.strip('"') != "qelib1.inc":
                self._diag(inc, f"cannot include {inc.text}; only qelib1.inc is built in")
            self._expect(";")
        elif word in ("qreg", "creg"):
            name = self._expect_kind("id", "register name")
            self._expect("[")
            size_tok = self._expect_kind("int", "register size")
            self._expect("]")
            self._expect(";")
            size = self._int(size_tok)
            if name.text in self.regs or name.text in self.cregs:
                self._fail(name, f"register {name.text!r} redeclared")
            if word == "qreg":
                if size < 1:
                    self._fail(size_tok, "qreg size must be positive")
                self.regs[name.text] = (self.nqubits, size)
                self.nqubits += size
            else:
                self.cregs[name.text] = size
        elif word == "barrier":
            self._operands()
            self._expect(";")
        elif word == "measure":
            self._operand()
            self._expect("->")
            cname = self._expect_kind("id", "classical register")
            if cname.text not in self.cregs:
                self._diag(cname, f"unknown creg {cname.text!r}")
            if self._peek() is not None and self._peek().text == "[":
                self.pos += 1
                self._expect_kind("int", "bit index")
                self._expect("]")
            self._expect(";")
            if not self.measured:
                self._diag(tok, "measurement ignored", "warning")
            self.measured = True
        elif word in ("gate", "opaque"):
            self._diag(tok, f"custom gate definitions ({word}) are not supported")
            self._skip_block()
            raise _StatementHandled
        elif word in ("reset", "if"):
            self._fail(tok, f"{word!r} is not supported")
        else:
            self._gate(tok)

    def _skip_block(self) -> None:
        depth = 0
        while self.pos < len(self.toks):
            t = self.toks[self.pos]
            self.pos += 1
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif t.text == ";" and depth == 0:
                return

    def _fail(self, tok, msg):
        self._diag(tok, msg)
        raise _StatementError

    def _gate(self, tok: _Tok) -> None:
        resolved = resolve_gate_name(tok.text)
        if resolved is None:
            self._fail(tok, f"unsupported gate {tok.text!r}")
        kind, nctrl = resolved
        params: list[float] = []
        nxt = self._peek()
        if nxt is not None and nxt.text == "(":
            self.pos += 1
            if self._peek() is not None and self._peek().text != ")":
                params.append(self._expr())
                while self._peek() is not None and self._peek().text == ",":
                    self.pos += 1
                    params.append(self._expr())
            self._expect(")")
        ops = self._operands()
        self._expect(";")
        if self.measured:
            self._fail(tok, "gate after measurement (mid-circuit measurement is not supported)")
        nt, np_ = GATE_ARITY[kind]
        if len(params) != np_:
            self._fail(tok, f"{tok.text} takes {np_} parameter(s), got {len(params)}")
        if len(ops) != nctrl + nt:
            self._fail(tok, f"{tok.text} takes {nctrl + nt} qubit operand(s), got {len(ops)}")
        width = {len(o) for o in ops if len(o) > 1}
        if len(width) > 1:
            self._fail(tok, "register operands differ in size")
        reps = width.pop() if width else 1
        for r in range(reps):
            qs = [o[r] if len(o) > 1 else o[0] for o in ops]
            try:
                self.gates.append(Gate(kind, tuple(qs[nctrl:]), tuple(qs[:nctrl]), tuple(params)))
            except CircuitError as exc:
                self._fail(tok, str(exc))

    def _int(self, tok: _Tok) -> int:
        if len(tok.text) > 9:
            self._fail(tok, f"integer {tok.text[:12]}... is too large")
        return int(tok.text)

    def _operands(self) -> list[list[int]]:
        ops = [self._operand()]
        while self._peek() is not None and self._peek().text == ",":
            self.pos += 1
            ops.append(self._operand())
        return ops

    def _operand(self) -> list[int]:
        name = self._expect_kind("id", "qubit operand")
        if name.text not in self.regs:
            self._fail(name, f"unknown qreg {name.text!r}")
        base, size = self.regs[name.text]
        if self._peek() is not None and self._peek().text == "[":
            self.pos += 1
            idx = self._expect_kind("int", "qubit index")
            self._expect("]")
            k = self._int(idx)
            if k >= size:
                self._fail(idx, f"index {k} out of range for {name.text}[{size}]")
            return [base + k]
        return list(range(base, base + size))

    # expressions: sum := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
    # unary := '-' unary | power; power := atom ('^' unary)?
    def _expr(self) -> float:
        v = self._term()
        while self._peek() is not None and self._peek().text in ("+", "-"):
            op = self._next().text
            r = self._term()
            v = v + r if op == "+" else v - r
        return v

    def _term(self) -> float:
        v = self._unary()
        while self._peek() is not None and self._peek().text in ("*", "/"):
            op = self._next()
            r = self._unary()
            if op.text == "*":
                v *= r
            elif r == 0:
                self._fail(op, "division by zero")
            else:
                v /= r
        return v

    def _unary(self) -> float:
        tok = self._peek()
        if tok is not None and tok.text in ("-", "+"):
            self.pos += 1
            v = self._unary()
            return -v if tok.text == "-" else v
        return self._power()

    def _power(self) -> float:
        base = self._atom()
        tok = self._peek()
        if tok is not None and tok.text == "^":
            self.pos += 1
            exp = self._unary()
            try:
                v = base ** exp
            except (OverflowError, ZeroDivisionError) as exc:
                self._fail(tok, f"bad power: {exc}")
            if isinstance(v, complex) or not math.isfinite(v):
                self._fail(tok, "power is not a finite real")
            return v
        return base

    def _atom(self) -> float:
        tok = self._next()
        if tok.kind in ("int", "real"):
            return float(tok.text)
        if tok.text == "pi":
            return math.pi
        if tok.text == "(":
            v = self._expr()
            self._expect(")")
            return v
        if tok.kind == "id" and tok.text in _FUNCS:
            self._expect("(")
            arg = self._expr()
            self._expect(")")
            try:
                v = _FUNCS[tok.text](arg)
            except (ValueError, OverflowError) as exc:
                self._fail(tok, f"{tok.text}({arg}): {exc}")
            return v
        self._fail(tok, f"unexpected {tok.text!r} in expression")


class _StatementError(Exception):
    pass


class _StatementHandled(_StatementError):
    pass


def parse(text: str | bytes, name: str = "") -> Circuit:
    """Parse QASM text or raise ``QasmError`` with positioned diagnostics."""
    p = Parser(text, name)
    c = p.parse()
    if c is None:
        raise QasmError(p.diagnostics)
    return c


def parse_file(path, name: str | None = None) -> Circuit:
    from pathlib import Path
    path = Path(path)
    return parse(path.read_bytes(), path.stem if name is None else name)


def emit(c: Circuit) -> str:
    """Write ``c`` as OpenQASM 2.0 over a single register ``q``."""
    out = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.n}];"]
    for g in c.gates:
        name = "c" * len(g.controls) + g.kind
        if g.params:
            name += "(" + ",".join(repr(p) for p in g.params) + ")"
        ops = ",".join(f"q[{q}]" for q in g.controls + g.targets)
        out.append(f"{name} {ops};")
    return "\n".join(out) + "\n"
