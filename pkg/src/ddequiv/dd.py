"""Decision-diagram package: construction, conversion, inspection and GC.

A ``Package`` owns one complex table, one unique table and the compute
caches.  Edges are ``(node, weight)`` tuples and must never be mixed between
packages.  A package is not thread-safe; use one per thread.
"""

from __future__ import annotations

import cmath
import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernel
from .circuit import Circuit, Gate
from .errors import DimensionMismatch, OverlappingControlTarget, QubitOutOfRange, ResourceLimit

DEFAULT_FID_EPS = 1e-8


class IdentityKind(enum.Enum):
    EXACT = "exact"
    GLOBAL_PHASE = "global_phase"
    NO = "no"


@dataclass(frozen=True)
class IdentityCheck:
    kind: IdentityKind
    phase: float = 0.0

    def __bool__(self) -> bool:
        return self.kind is not IdentityKind.NO


@dataclass
class DiagInfo:
    """Summary of the diagonal below a matrix node, for a unit incoming weight."""

    diag_only: bool
    const: complex | None
    minmod2: float
    argmin: int
    maxabs: float = 1.0
    offmax: float = 0.0


class PackageMixin:
    """High-level operations layered over a backend ``Core``."""

    def _setup(self, fid_eps: float = DEFAULT_FID_EPS):
        self.fid_eps = fid_eps
        self._ident_edges: list = []
        self._gate_cache: dict = {}
        self._diag_memo: dict = {}

    # -- deadline --------------------------------------------------------

    def set_timeout(self, seconds: float | None) -> None:
        self.deadline = None if seconds is None else time.monotonic() + seconds

    def check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise ResourceLimit("deadline expired")

    # -- basic constructors ----------------------------------------------

    def identity(self, n: int) -> tuple:
        """Identity matrix DD on ``n`` qubits: exactly ``n`` nodes."""
        if n < 0:
            raise ValueError("n must be non-negative")
        chain = self._ident_edges
        if not chain:
            chain.append(self.one)
        while len(chain) <= n:
            below = chain[-1]
            e = self._make(len(chain) - 1, (below, self.zero, self.zero, below))
            e[0].ident = True
            chain.append(e)
        return chain[n]

    def basis_state(self, n: int, i: int) -> tuple:
        if not 0 <= i < (1 << n):
            raise IndexError(f"basis index {i} out of range for {n} qubits")
        e = self.one
        for level in range(n):
            if (i >> level) & 1:
                e = self._make(level, (self.zero, e))
            else:
                e = self._make(level, (e, self.zero))
        return e

    def gate_dd(self, gate: Gate, n: int) -> tuple:
        """System-matrix DD of ``gate`` acting inside an ``n``-qubit register."""
        key = (gate, n)
        e = self._gate_cache.get(key)
        if e is not None:
            return e
        for q in gate.qubits:
            if not 0 <= q < n:
                raise QubitOutOfRange(f"gate {gate} touches q{q} but n={n}")
        if set(gate.targets) & set(gate.controls):
            raise OverlappingControlTarget(str(gate))
        self.identity(n)
        lookup = self.ctab.lookup
        u = [[lookup(complex(v)) for v in row] for row in gate.matrix()]
        tpos = {q: j for j, q in enumerate(gate.targets)}
        ctrl = set(gate.controls)
        memo: dict = {}

        def rec(level, row, col, violated):
            if level < 0:
                if violated:
                    return self.one if row == col else self.zero
                w = u[row][col]
                return self.zero if w == 0 else (self.terminal, w)
            k = (level, row, col, violated)
            r = memo.get(k)
            if r is not None:
                return r
            if level in tpos:
                b = 1 << tpos[level]
                r = self._make(level, (
                    rec(level - 1, row, col, violated),
                    rec(level - 1, row, col | b, violated),
                    rec(level - 1, row | b, col, violated),
                    rec(level - 1, row | b, col | b, violated),
                ))
            elif level in ctrl:
                r = self._make(level, (rec(level - 1, row, col, True), self.zero,
                                       self.zero, rec(level - 1, row, col, violated)))
            else:
                below = rec(level - 1, row, col, violated)
                r = self._make(level, (below, self.zero, self.zero, below))
            memo[k] = r
            return r

        e = rec(n - 1, 0, 0, False)
        self._gate_cache[key] = e
        return e

    # -- dense conversion --------------------------------------------------

    def from_dense(self, data) -> tuple:
        """Import a 2^n vector or 2^n x 2^n matrix."""
        a = np.asarray(data, dtype=complex)
        size = a.shape[0]
        n = size.bit_length() - 1
        if size < 1 or (1 << n) != size or (a.ndim == 2 and a.shape != (size, size)) \
                or a.ndim not in (1, 2):
            raise DimensionMismatch(f"shape {a.shape} is not a power-of-two vector or square")
        if not np.all(np.isfinite(a)):
            from .errors import NonFiniteValue
            raise NonFiniteValue("dense input contains NaN or Inf")

        def vec(lo, size, level):
            if level < 0:
                v = complex(a[lo])
                return self.zero if v == 0 else (self.terminal, v)
            h = size // 2
            return self._make(level, (vec(lo, h, level - 1), vec(lo + h, h, level - 1)))

        def mat(r, c, size, level):
            if level < 0:
                v = complex(a[r, c])
                return self.zero if v == 0 else (self.terminal, v)
            h = size // 2
            return self._make(level, (mat(r, c, h, level - 1), mat(r, c + h, h, level - 1),
                                      mat(r + h, c, h, level - 1),
                                      mat(r + h, c + h, h, level - 1)))

        if a.ndim == 1:
            return vec(0, size, n - 1)
        return mat(0, 0, size, n - 1)

    def to_dense(self, e: tuple, n: int | None = None) -> np.ndarray:
        """Expand an edge to a dense numpy array (row-major for matrices)."""
        node, w = e
        if n is None:
            if node.level < 0:
                raise ValueError("qubit count required for a terminal edge")
            n = node.level + 1
        is_vec = node.level >= 0 and len(node.e) == 2
        size = 1 << n
        memo: dict = {}

        def expand(nd, level):
            if level < 0:
                return np.ones((1,) if is_vec else (1, 1), dtype=complex)
            r = memo.get(id(nd))
            if r is not None:
                return r
            h = 1 << level
            parts = []
            for child, cw in nd.e:
                if cw == 0:
                    parts.append(np.zeros((h,) if is_vec else (h, h), dtype=complex))
                else:
                    parts.append(cw * expand(child, level - 1))
            if is_vec:
                r = np.concatenate(parts)
            else:
                r = np.block([[parts[0], parts[1]], [parts[2], parts[3]]])
            memo[id(nd)] = r
            return r

        if w == 0:
            return np.zeros((size,) if is_vec else (size, size), dtype=complex)
        if node.level != n - 1 and node.level >= 0:
            raise DimensionMismatch(f"edge spans {node.level + 1} qubits, not {n}")
        return w * expand(node, n - 1)

    def amplitudes(self, e: tuple, limit: int | None = None) -> dict[int, complex]:
        """Nonzero entries of a vector DD as ``{basis index: amplitude}``.

        Stops after ``limit`` entries when given.
        """
        out: dict[int, complex] = {}
        stack = [(e[0], e[1], 0)]
        while stack:
            node, w, idx = stack.pop()
            if w == 0:
                continue
            if node.level < 0:
                out[idx] = complex(w)
                if limit is not None and len(out) >= limit:
                    break
                continue
            if len(node.e) != 2:
                raise DimensionMismatch("amplitudes needs a vector DD")
            (c0, w0), (c1, w1) = node.e
            stack.append((c1, w * w1, idx | (1 << node.level)))
            stack.append((c0, w * w0, idx))
        return dict(sorted(out.items()))

    def superposition(self, n: int, i: int, j: int) -> tuple:
        """``(|i> + |j>) / sqrt(2)`` as a vector DD."""
        s = self.add(self.basis_state(n, i), self.basis_state(n, j))
        return (s[0], self.ctab.lookup(s[1] * math.sqrt(0.5)))

    # -- circuits ---------------------------------------------------------

    def apply(self, c: Circuit, v: tuple) -> tuple:
        """Run circuit ``c`` on the state DD ``v``."""
        for g in c.gates:
            self.check_deadline()
            v = self.multiply(self.gate_dd(g, c.n), v)
        return v

    def build_matrix(self, c: Circuit) -> tuple:
        e = self.identity(c.n)
        for g in c.gates:
            self.check_deadline()
            e = self.multiply(self.gate_dd(g, c.n), e)
        return e

    def simulate(self, c: Circuit, i: int) -> tuple:
        v = self.basis_state(c.n, i)
        for g in c.gates:
            self.check_deadline()
            v = self.multiply(self.gate_dd(g, c.n), v)
        return v

    def fidelity(self, x: tuple, y: tuple) -> float:
        f = abs(self.inner_product(x, y)) ** 2
        return min(1.0, max(0.0, f))

    # -- identity test ----------------------------------------------------

    def diag_info(self, node) -> DiagInfo:
        """Diagonal summary of a matrix node (memoized until the next gc)."""
        memo = self._diag_memo
        r = memo.get(node)
        if r is not None:
            return r
        if node.level < 0:
            r = DiagInfo(True, 1 + 0j, 1.0, 0, 1.0, 0.0)
            memo[node] = r
            return r
        e0, e1, e2, e3 = node.e
        tol = self.fid_eps
        halves = []
        maxabs = 0.0
        offmax = 0.0
        for child, w in node.e:
            if w != 0:
                maxabs = max(maxabs, abs(w) * self.diag_info(child).maxabs)
        for child, w in (e1, e2):
            if w != 0:
                offmax = max(offmax, abs(w) * self.diag_info(child).maxabs)
        for child, w in (e0, e3):
            if w == 0:
                halves.append((0j, 0.0, 0))
            else:
                d = self.diag_info(child)
                offmax = max(offmax, abs(w) * d.offmax)
                halves.append((None if d.const is None else w * d.const,
                               abs(w) ** 2 * d.minmod2, d.argmin))
        diag_only = offmax < tol
        c0, c1 = halves[0][0], halves[1][0]
        const = c0 if c0 is not None and c1 is not None and abs(c0 - c1) < tol else None
        if halves[1][1] < halves[0][1]:
            minmod2, argmin = halves[1][1], halves[1][2] + (1 << node.level)
        else:
            minmod2, argmin = halves[0][1], halves[0][2]
        r = DiagInfo(diag_only, const, minmod2, argmin, maxabs, offmax)
        memo[node] = r
        return r

    def first_diff(self, node, target: complex, acc: complex = 1 + 0j) -> int | None:
        """Lowest diagonal index whose entry (times ``acc``) differs from ``target``."""
        tol = self.fid_eps
        if node.level < 0:
            return None if abs(acc - target) < tol else 0
        d = self.diag_info(node)
        if d.const is not None and abs(acc * d.const - target) < tol:
            return None
        for half, (child, w) in ((0, node.e[0]), (1, node.e[3])):
            off = half << node.level
            if w == 0:
                if abs(target) >= tol:
                    return off
                continue
            j = self.first_diff(child, target, acc * w)
            if j is not None:
                return off + j
        return None

    def is_identity(self, e: tuple, up_to_global_phase: bool = True) -> IdentityCheck:
        node, w = e
        if w == 0:
            return IdentityCheck(IdentityKind.NO)
        if node.level >= 0 and len(node.e) != 4:
            raise DimensionMismatch("is_identity needs a matrix DD")
        if node.level < 0 or node.ident:
            scale = w
        else:
            d = self.diag_info(node)
            if not d.diag_only or d.const is None:
                return IdentityCheck(IdentityKind.NO)
            scale = w * d.const
        if self.ctab.approx_eq(scale, 1 + 0j):
            return IdentityCheck(IdentityKind.EXACT)
        if abs(abs(scale) - 1.0) < self.fid_eps:
            if not up_to_global_phase:
                return IdentityCheck(IdentityKind.NO)
            return IdentityCheck(IdentityKind.GLOBAL_PHASE,
                                 cmath.phase(scale) % (2 * math.pi))
        return IdentityCheck(IdentityKind.NO)

    # -- memory management ---------------------------------------------------

    def inc_ref(self, e: tuple) -> None:
        """Pin the root node of ``e`` so gc keeps it without listing it as a root."""
        if e[0].level >= 0:
            e[0].ref += 1

    def dec_ref(self, e: tuple) -> None:
        node = e[0]
        if node.level >= 0:
            if node.ref <= 0:
                raise ValueError("reference count underflow")
            node.ref -= 1

    def live_node_count(self) -> int:
        return len(self.unique)

    def gc(self, roots=(), compact_numbers: bool = True) -> int:
        """Drop every node unreachable from ``roots`` or from pinned nodes.

        Compute caches, the gate cache and the identity chain are cleared.
        Returns the number of reclaimed nodes.
        """
        marked: set = set()
        stack = [e[0] for e in roots if e[0].level >= 0]
        stack.extend(node for node in self.unique.values() if node.ref > 0)
        weights = [e[1] for e in roots]
        while stack:
            node = stack.pop()
            if id(node) in marked:
                continue
            marked.add(id(node))
            for child, w in node.e:
                weights.append(w)
                if child.level >= 0 and id(child) not in marked:
                    stack.append(child)
        before = len(self.unique)
        self.unique = {k: nd for k, nd in self.unique.items() if id(nd) in marked}
        # any survivor keeps its flag; identity() re-flags rebuilt chains
        self.clear_compute()
        self._gate_cache.clear()
        self._ident_edges = []
        self._diag_memo.clear()
        if compact_numbers:
            self.ctab.retain(weights)
        return before - len(self.unique)

    # -- debugging --------------------------------------------------------------

    def to_dot(self, e: tuple) -> str:
        """Graphviz rendering of the DD below ``e``."""
        lines = ["digraph dd {", '  root [shape=point];', '  t [shape=box, label="1"];']
        ids: dict = {}

        def name(nd):
            if nd.level < 0:
                return "t"
            if id(nd) not in ids:
                ids[id(nd)] = f"n{len(ids)}"
            return ids[id(nd)]

        def fmt(w):
            return f"{w.real:.4g}{w.imag:+.4g}i" if w.imag else f"{w.real:.4g}"

        lines.append(f'  root -> {name(e[0])} [label="{fmt(e[1])}"];')
        seen = set()
        stack = [e[0]]
        while stack:
            nd = stack.pop()
            if nd.level < 0 or id(nd) in seen:
                continue
            seen.add(id(nd))
            lines.append(f'  {name(nd)} [shape=circle, label="q{nd.level}"];')
            for k, (child, w) in enumerate(nd.e):
                if w == 0:
                    continue
                lines.append(f'  {name(nd)} -> {name(child)} [label="{k}: {fmt(w)}"];')
                stack.append(child)
        lines.append("}")
        return "\n".join(lines)


_classes: dict = {}


def package_class(backend: str | None = None):
    """The ``Package`` class bound to a kernel backend (default: the selected one)."""
    mod = kernel._backend if backend is None else kernel.load_backend(backend)
    cls = _classes.get(mod.BACKEND)
    if cls is None:
        def __init__(self, eps: float = 1e-10, fid_eps: float = DEFAULT_FID_EPS):
            mod.Core.__init__(self, eps)
            self._setup(fid_eps)
        cls = type("Package", (PackageMixin, mod.Core), {
            "__init__": __init__, "__module__": __name__,
            "__doc__": "Decision-diagram package bound to one kernel backend."})
        _classes[mod.BACKEND] = cls
    return cls


Package = package_class()


def new_package(backend: str | None = None, eps: float = 1e-10,
                fid_eps: float = DEFAULT_FID_EPS):
    return package_class(backend)(eps, fid_eps)
