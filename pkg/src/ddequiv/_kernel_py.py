"""Pure-Python decision-diagram core.

This module is the reference implementation of the hot kernels: the
tolerance-canonicalizing complex table, the unique table with node
normalization, and the memoized recursive operations (multiply, add,
adjoint, inner product).  ``_kernel_c.pyx`` mirrors it line for line with
static types; ``ddequiv.kernel`` picks one of the two at import time.

Edges are plain ``(node, weight)`` tuples.  Weights stored inside nodes are
canonical ``complex`` objects owned by the complex table.  Matrix nodes have
four successors in row-major block order (row = output bit of the node's
qubit, column = input bit); vector nodes have two.
"""

from __future__ import annotations

import math
import time

from .errors import DimensionMismatch, LevelOrderViolation, NonFiniteValue, ResourceLimit

BACKEND = "python"

SQRT1_2 = math.sqrt(0.5)
_POLL_MASK = 1023
# relative slack when deciding which weights share the largest modulus
_TIE = 1e-9


class ComplexTable:
    """Canonical store for complex numbers up to a tolerance.

    Real and imaginary parts are canonicalized independently: a real value
    lands in bucket ``floor(x / eps)`` and is identified with any stored value
    in the same or a neighboring bucket that lies within ``eps``.
    """

    def __init__(self, eps: float = 1e-10):
        if not eps > 0.0 or not math.isfinite(eps):
            raise ValueError(f"tolerance must be positive and finite, got {eps!r}")
        self.eps = eps
        self._inv = 1.0 / eps
        self._reals: dict[int, float] = {}
        self._values: dict[tuple[float, float], complex] = {}
        for x in (0.0, 1.0, -1.0, 0.5, -0.5, SQRT1_2, -SQRT1_2):
            self._reals[math.floor(x * self._inv)] = x
        self.zero = self.lookup_parts(0.0, 0.0)
        self.one = self.lookup_parts(1.0, 0.0)

    def __len__(self) -> int:
        return len(self._values)

    def _real(self, x: float) -> float:
        try:
            scaled = x * self._inv
            k = math.floor(scaled)
        except (OverflowError, ValueError):
            raise NonFiniteValue(f"cannot store non-finite value {x!r}") from None
        reals = self._reals
        eps = self.eps
        v = reals.get(k)
        if v is not None and abs(v - x) < eps:
            return v
        if scaled - k >= 0.5:
            near, far = k + 1, k - 1
        else:
            near, far = k - 1, k + 1
        v = reals.get(near)
        if v is not None and abs(v - x) < eps:
            return v
        v = reals.get(far)
        if v is not None and abs(v - x) < eps:
            return v
        if k not in reals:
            reals[k] = x
        return x

    def lookup_parts(self, re: float, im: float) -> complex:
        key = (self._real(re), self._real(im))
        c = self._values.get(key)
        if c is None:
            c = complex(key[0], key[1])
            self._values[key] = c
        return c

    def lookup(self, z: complex) -> complex:
        return self.lookup_parts(z.real, z.imag)

    def approx_eq(self, a: complex, b: complex) -> bool:
        return abs(a.real - b.real) < self.eps and abs(a.imag - b.imag) < self.eps

    def retain(self, keep) -> int:
        """Drop every stored value not in ``keep`` (seeds always survive)."""
        keep = set(keep)
        keep.update((self.zero, self.one))
        live_reals = set()
        for c in keep:
            live_reals.add(c.real)
            live_reals.add(c.imag)
        for x in (0.0, 1.0, -1.0, 0.5, -0.5, SQRT1_2, -SQRT1_2):
            live_reals.add(x)
        before = len(self._values)
        self._values = {k: c for k, c in self._values.items() if c in keep}
        self._reals = {k: x for k, x in self._reals.items() if x in live_reals}
        return before - len(self._values)


class Node:
    """Hash-consed DD node; ``e`` holds the successor edges."""

    __slots__ = ("level", "e", "ref", "ident", "__weakref__")

    def __init__(self, level: int, e: tuple):
        self.level = level
        self.e = e
        self.ref = 0
        self.ident = False

    def __repr__(self) -> str:
        if self.level < 0:
            return "Node(terminal)"
        return f"Node(q{self.level}, arity={len(self.e)}, id={id(self):#x})"


class Core:
    """Unique table, compute tables and the recursive DD algebra."""

    def __init__(self, eps: float = 1e-10):
        self.ctab = ComplexTable(eps)
        self.terminal = Node(-1, ())
        self.zero = (self.terminal, self.ctab.zero)
        self.one = (self.terminal, self.ctab.one)
        self.unique: dict = {}
        self._mul_cache: dict = {}
        self._add_cache: dict = {}
        self._adj_cache: dict = {}
        self._ip_cache: dict = {}
        self.deadline: float | None = None
        self._ticks = 0

    # -- bookkeeping ---------------------------------------------------

    def clear_compute(self) -> None:
        self._mul_cache.clear()
        self._add_cache.clear()
        self._adj_cache.clear()
        self._ip_cache.clear()

    def compute_size(self) -> int:
        return (len(self._mul_cache) + len(self._add_cache)
                + len(self._adj_cache) + len(self._ip_cache))

    def _poll(self) -> None:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise ResourceLimit("deadline expired during DD operation")

    # -- node construction ---------------------------------------------

    def make_node(self, level: int, edges) -> tuple:
        """Normalize ``edges`` under a node of ``level`` and hash-cons it."""
        edges = tuple(edges)
        if len(edges) not in (2, 4):
            raise ValueError(f"a node needs 2 or 4 successors, got {len(edges)}")
        for child, w in edges:
            if child.level >= level:
                raise LevelOrderViolation(
                    f"successor at level {child.level} under node at level {level}")
        return self._make(level, edges)

    def _make(self, level, edges):
        # Divide by the largest-modulus weight (leftmost one on ties), so every
        # stored weight has modulus <= 1 and the absolute tolerance of the
        # complex table stays meaningful at every level.  Weights far below
        # the largest one are dropped as noise.  The extracted factor is not
        # rounded here; the parent rounds it relative to its own scale.
        lookup = self.ctab.lookup
        zero = self.zero
        m2 = 0.0
        for child, w in edges:
            a = w.real * w.real + w.imag * w.imag
            if a > m2:
                m2 = a
        if m2 == 0.0:
            return zero
        eps = self.ctab.eps
        thr = eps * math.sqrt(m2)
        tie = m2 * (1.0 - _TIE)
        itop = 0
        for itop, (child, w) in enumerate(edges):
            if w.real * w.real + w.imag * w.imag >= tie:
                break
        top = edges[itop][1]
        out = []
        for i, (child, w) in enumerate(edges):
            if abs(w.real) < thr and abs(w.imag) < thr:
                out.append(zero)
            elif i == itop:
                out.append((child, self.ctab.one))
            else:
                v = lookup(w / top)
                out.append(zero if v == 0 else (child, v))
        key = (level, tuple(out))
        node = self.unique.get(key)
        if node is None:
            node = Node(level, key[1])
            self.unique[key] = node
        return (node, top)

    # -- multiplication ------------------------------------------------

    def multiply(self, a: tuple, b: tuple) -> tuple:
        """Product of matrix ``a`` with matrix or vector ``b``."""
        wa = a[1]
        wb = b[1]
        if wa == 0 or wb == 0:
            return self.zero
        na = a[0]
        nb = b[0]
        if na.level != nb.level:
            raise DimensionMismatch(
                f"operands span {na.level + 1} and {nb.level + 1} qubits")
        if na.level >= 0 and len(na.e) != 4:
            raise DimensionMismatch("left operand of multiply must be a matrix")
        r = self._mul(na, nb)
        if r[1] == 0:
            return self.zero
        w = self.ctab.lookup(r[1] * wa * wb)
        if w == 0:
            return self.zero
        return (r[0], w)

    def _mul(self, na, nb):
        if na.level < 0:
            return self.one
        if na.ident:
            return (nb, self.ctab.one)
        ea = na.e
        eb = nb.e
        if nb.ident:
            return (na, self.ctab.one)
        key = (na, nb)
        res = self._mul_cache.get(key)
        if res is not None:
            return res
        self._ticks += 1
        if not self._ticks & _POLL_MASK:
            self._poll()
        mule = self._mule
        add = self._add
        if len(eb) == 4:
            res = self._make(na.level, (
                add(mule(ea[0], eb[0]), mule(ea[1], eb[2])),
                add(mule(ea[0], eb[1]), mule(ea[1], eb[3])),
                add(mule(ea[2], eb[0]), mule(ea[3], eb[2])),
                add(mule(ea[2], eb[1]), mule(ea[3], eb[3])),
            ))
        else:
            res = self._make(na.level, (
                add(mule(ea[0], eb[0]), mule(ea[1], eb[1])),
                add(mule(ea[2], eb[0]), mule(ea[3], eb[1])),
            ))
        self._mul_cache[key] = res
        return res

    def _mule(self, x, y):
        wx = x[1]
        wy = y[1]
        if wx == 0 or wy == 0:
            return self.zero
        r = self._mul(x[0], y[0])
        w = r[1]
        if w == 0:
            return self.zero
        return (r[0], w * wx * wy)

    # -- addition ------------------------------------------------------

    def add(self, a: tuple, b: tuple) -> tuple:
        """Entrywise sum of two DDs of the same shape."""
        if a[1] != 0 and b[1] != 0:
            na, nb = a[0], b[0]
            if na.level != nb.level or len(na.e) != len(nb.e):
                raise DimensionMismatch("add operands differ in shape")
        r = self._add(a, b)
        w = self.ctab.lookup(r[1])
        if w == 0:
            return self.zero
        return (r[0], w)

    def _add(self, x, y):
        wx = x[1]
        if wx == 0:
            return y
        wy = y[1]
        if wy == 0:
            return x
        nx = x[0]
        ny = y[0]
        if nx is ny:
            s = wx + wy
            return self.zero if s == 0 else (nx, s)
        ratio = self.ctab.lookup(wy / wx)
        key = (nx, ny, ratio)
        res = self._add_cache.get(key)
        if res is None:
            self._ticks += 1
            if not self._ticks & _POLL_MASK:
                self._poll()
            ex = nx.e
            ey = ny.e
            add = self._add
            if len(ex) == 4:
                e0, e1, e2, e3 = ey
                res = self._make(nx.level, (
                    add(ex[0], (e0[0], e0[1] * ratio)),
                    add(ex[1], (e1[0], e1[1] * ratio)),
                    add(ex[2], (e2[0], e2[1] * ratio)),
                    add(ex[3], (e3[0], e3[1] * ratio)),
                ))
            else:
                e0, e1 = ey
                res = self._make(nx.level, (
                    add(ex[0], (e0[0], e0[1] * ratio)),
                    add(ex[1], (e1[0], e1[1] * ratio)),
                ))
            self._add_cache[key] = res
        if res[1] == 0:
            return self.zero
        return (res[0], res[1] * wx)

    # -- conjugate transpose -------------------------------------------

    def adjoint(self, a: tuple) -> tuple:
        w = a[1]
        if w == 0:
            return self.zero
        na = a[0]
        if na.level >= 0 and len(na.e) != 4:
            raise DimensionMismatch("adjoint needs a matrix DD")
        r = self._adj(na)
        v = self.ctab.lookup(r[1] * w.conjugate())
        return self.zero if v == 0 else (r[0], v)

    def _adj(self, node):
        if node.level < 0 or node.ident:
            return (node, self.ctab.one)
        res = self._adj_cache.get(node)
        if res is not None:
            return res
        e = node.e
        out = []
        for idx in (0, 2, 1, 3):
            child, w = e[idx]
            if w == 0:
                out.append(self.zero)
            else:
                r = self._adj(child)
                out.append((r[0], r[1] * w.conjugate()))
        res = self._make(node.level, out)
        self._adj_cache[node] = res
        return res

    # -- inner product -------------------------------------------------

    def inner_product(self, a: tuple, b: tuple) -> complex:
        """``<a|b>``: conjugate-linear in ``a``; Frobenius product for matrices."""
        wa = a[1]
        wb = b[1]
        if wa == 0 or wb == 0:
            return 0j
        na, nb = a[0], b[0]
        if na.level != nb.level or len(na.e) != len(nb.e):
            raise DimensionMismatch("inner product operands differ in shape")
        return wa.conjugate() * wb * self._ip(na, nb)

    def _ip(self, na, nb):
        if na.level < 0:
            return 1.0 + 0j
        key = (na, nb)
        res = self._ip_cache.get(key)
        if res is not None:
            return res
        s = 0j
        for ex, ey in zip(na.e, nb.e):
            wx = ex[1]
            wy = ey[1]
            if wx == 0 or wy == 0:
                continue
            s += wx.conjugate() * wy * self._ip(ex[0], ey[0])
        self._ip_cache[key] = s
        return s

    # -- size ----------------------------------------------------------

    def node_count(self, e: tuple) -> int:
        """Distinct non-terminal nodes reachable from ``e``."""
        root = e[0]
        if root.level < 0 or e[1] == 0:
            return 0
        seen = {id(root)}
        stack = [root]
        while stack:
            node = stack.pop()
            for child, w in node.e:
                if child.level >= 0 and id(child) not in seen:
                    seen.add(id(child))
                    stack.append(child)
        return len(seen)
