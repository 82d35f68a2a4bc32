# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decision-diagram core.

Statically typed twin of ``_kernel_py``: same data layout (edges are
``(node, weight)`` tuples, weights are canonical ``complex`` objects), same
normalization and cache keys, so both backends build identical diagrams.
"""

from libc.math cimport floor, fabs, isfinite, sqrt

import time

from .errors import DimensionMismatch, LevelOrderViolation, NonFiniteValue, ResourceLimit

BACKEND = "c"

SQRT1_2 = sqrt(0.5)
cdef int _POLL_MASK = 1023
# relative slack when deciding which weights share the largest modulus
cdef double _TIE = 1e-9
cdef tuple _SEEDS = (0.0, 1.0, -1.0, 0.5, -0.5, sqrt(0.5), -sqrt(0.5))


cdef class ComplexTable:
    cdef public double eps
    cdef double _inv
    cdef dict _reals
    cdef dict _values
    cdef public object zero
    cdef public object one

    def __init__(self, double eps=1e-10):
        if not (eps > 0.0) or not isfinite(eps):
            raise ValueError(f"tolerance must be positive and finite, got {eps!r}")
        self.eps = eps
        self._inv = 1.0 / eps
        self._reals = {}
        self._values = {}
        for x in _SEEDS:
            self._reals[<long long>floor(x * self._inv)] = x
        self.zero = self.lookup_parts(0.0, 0.0)
        self.one = self.lookup_parts(1.0, 0.0)

    def __len__(self):
        return len(self._values)

    cdef double _real(self, double x) except? -1.0:
        cdef double scaled = x * self._inv
        if not isfinite(scaled):
            raise NonFiniteValue(f"cannot store non-finite value {x!r}")
        if fabs(scaled) > 9.0e18:
            return self._real_big(x, scaled)
        cdef long long k = <long long>floor(scaled)
        cdef long long near, far
        cdef object v = self._reals.get(k)
        if v is not None and fabs(<double>v - x) < self.eps:
            return <double>v
        if scaled - k >= 0.5:
            near = k + 1
            far = k - 1
        else:
            near = k - 1
            far = k + 1
        v = self._reals.get(near)
        if v is not None and fabs(<double>v - x) < self.eps:
            return <double>v
        v = self._reals.get(far)
        if v is not None and fabs(<double>v - x) < self.eps:
            return <double>v
        if k not in self._reals:
            self._reals[k] = x
        return x

    cdef double _real_big(self, double x, double scaled) except? -1.0:
        # bucket keys beyond the long long range; Python ints hash the same
        # as the small keys, so both paths share one dict
        k = int(floor(scaled))
        for kk in (k, k + 1, k - 1):
            v = self._reals.get(kk)
            if v is not None and fabs(<double>v - x) < self.eps:
                return <double>v
        if k not in self._reals:
            self._reals[k] = x
        return x

    cdef object _lookup(self, double re, double im):
        cdef tuple key = (self._real(re), self._real(im))
        cdef object c = self._values.get(key)
        if c is None:
            c = complex(key[0], key[1])
            self._values[key] = c
        return c

    def lookup_parts(self, double re, double im):
        return self._lookup(re, im)

    def lookup(self, z):
        z = complex(z)
        return self._lookup(z.real, z.imag)

    def approx_eq(self, a, b):
        a = complex(a)
        b = complex(b)
        return fabs(a.real - b.real) < self.eps and fabs(a.imag - b.imag) < self.eps

    def retain(self, keep):
        keep = set(keep)
        keep.update((self.zero, self.one))
        live_reals = set()
        for c in keep:
            live_reals.add(c.real)
            live_reals.add(c.imag)
        for x in _SEEDS:
            live_reals.add(x)
        before = len(self._values)
        self._values = {k: c for k, c in self._values.items() if c in keep}
        self._reals = {k: x for k, x in self._reals.items() if x in live_reals}
        return before - len(self._values)


cdef class Node:
    cdef public int level
    cdef public tuple e
    cdef public long ref
    cdef public bint ident
    cdef object __weakref__

    def __init__(self, int level, tuple e):
        self.level = level
        self.e = e
        self.ref = 0
        self.ident = False

    def __repr__(self):
        if self.level < 0:
            return "Node(terminal)"
        return f"Node(q{self.level}, arity={len(self.e)}, id={id(self):#x})"


cdef inline bint _is_zero(object w):
    return (<double complex>w) == 0


cdef class Core:
    cdef public ComplexTable ctab
    cdef public Node terminal
    cdef public tuple zero
    cdef public tuple one
    cdef public dict unique
    cdef dict _mul_cache
    cdef dict _add_cache
    cdef dict _adj_cache
    cdef dict _ip_cache
    cdef public object deadline
    cdef long _ticks

    def __init__(self, double eps=1e-10):
        self.ctab = ComplexTable(eps)
        self.terminal = Node(-1, ())
        self.zero = (self.terminal, self.ctab.zero)
        self.one = (self.terminal, self.ctab.one)
        self.unique = {}
        self._mul_cache = {}
        self._add_cache = {}
        self._adj_cache = {}
        self._ip_cache = {}
        self.deadline = None
        self._ticks = 0

    def clear_compute(self):
        self._mul_cache.clear()
        self._add_cache.clear()
        self._adj_cache.clear()
        self._ip_cache.clear()

    def compute_size(self):
        return (len(self._mul_cache) + len(self._add_cache)
                + len(self._adj_cache) + len(self._ip_cache))

    cdef int _poll(self) except -1:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise ResourceLimit("deadline expired during DD operation")
        return 0

    cdef inline int _tick(self) except -1:
        self._ticks += 1
        if not (self._ticks & _POLL_MASK):
            self._poll()
        return 0

    # -- node construction ---------------------------------------------

    def make_node(self, int level, edges):
        edges = tuple(edges)
        if len(edges) not in (2, 4):
            raise ValueError(f"a node needs 2 or 4 successors, got {len(edges)}")
        for child, w in edges:
            if (<Node>child).level >= level:
                raise LevelOrderViolation(
                    f"successor at level {(<Node>child).level} under node at level {level}")
        return self._make_c(level, edges)

    def _make(self, int level, edges):
        return self._make_c(level, tuple(edges))

    cdef tuple _make_c(self, int level, tuple edges):
        # divide by the largest-modulus weight, leftmost on ties
        cdef ComplexTable ct = self.ctab
        cdef double m2 = 0.0, a, thr, tie
        cdef double complex topv = 0, w
        cdef int i, n = len(edges), itop = -1
        cdef list out = []
        cdef tuple edge
        cdef object v
        for edge in edges:
            w = edge[1]
            a = w.real * w.real + w.imag * w.imag
            if a > m2:
                m2 = a
        if m2 == 0.0:
            return self.zero
        thr = ct.eps * sqrt(m2)
        tie = m2 * (1.0 - _TIE)
        for i in range(n):
            w = (<tuple>edges[i])[1]
            if w.real * w.real + w.imag * w.imag >= tie:
                itop = i
                topv = w
                break
        for i in range(n):
            edge = edges[i]
            w = edge[1]
            if fabs(w.real) < thr and fabs(w.imag) < thr:
                out.append(self.zero)
            elif i == itop:
                out.append((edge[0], ct.one))
            else:
                w = w / topv
                v = ct._lookup(w.real, w.imag)
                if _is_zero(v):
                    out.append(self.zero)
                else:
                    out.append((edge[0], v))
        cdef tuple succ = tuple(out)
        cdef tuple key = (level, succ)
        cdef object node = self.unique.get(key)
        if node is None:
            node = Node(level, succ)
            self.unique[key] = node
        return (node, (<tuple>edges[itop])[1])

    # -- multiplication ------------------------------------------------

    def multiply(self, tuple a, tuple b):
        cdef double complex wa = a[1], wb = b[1], w
        if wa == 0 or wb == 0:
            return self.zero
        cdef Node na = a[0], nb = b[0]
        if na.level != nb.level:
            raise DimensionMismatch(
                f"operands span {na.level + 1} and {nb.level + 1} qubits")
        if na.level >= 0 and len(na.e) != 4:
            raise DimensionMismatch("left operand of multiply must be a matrix")
        cdef tuple r = self._mul(na, nb)
        w = r[1]
        if w == 0:
            return self.zero
        w = w * wa * wb
        v = self.ctab._lookup(w.real, w.imag)
        if _is_zero(v):
            return self.zero
        return (r[0], v)

    cdef tuple _mul(self, Node na, Node nb):
        if na.level < 0:
            return self.one
        if na.ident:
            return (nb, self.ctab.one)
        if nb.ident:
            return (na, self.ctab.one)
        cdef tuple key = (na, nb)
        cdef object res = self._mul_cache.get(key)
        if res is not None:
            return <tuple>res
        self._tick()
        cdef tuple ea = na.e, eb = nb.e
        cdef tuple r
        if len(eb) == 4:
            r = self._make_c(na.level, (
                self._add(self._mule(ea[0], eb[0]), self._mule(ea[1], eb[2])),
                self._add(self._mule(ea[0], eb[1]), self._mule(ea[1], eb[3])),
                self._add(self._mule(ea[2], eb[0]), self._mule(ea[3], eb[2])),
                self._add(self._mule(ea[2], eb[1]), self._mule(ea[3], eb[3])),
            ))
        else:
            r = self._make_c(na.level, (
                self._add(self._mule(ea[0], eb[0]), self._mule(ea[1], eb[1])),
                self._add(self._mule(ea[2], eb[0]), self._mule(ea[3], eb[1])),
            ))
        self._mul_cache[key] = r
        return r

    cdef tuple _mule(self, tuple x, tuple y):
        cdef double complex wx = x[1], wy = y[1], w
        if wx == 0 or wy == 0:
            return self.zero
        cdef tuple r = self._mul(<Node>x[0], <Node>y[0])
        w = r[1]
        if w == 0:
            return self.zero
        return (r[0], complex(w * wx * wy))

    # -- addition ------------------------------------------------------

    def add(self, tuple a, tuple b):
        cdef Node na, nb
        if not _is_zero(a[1]) and not _is_zero(b[1]):
            na = a[0]
            nb = b[0]
            if na.level != nb.level or len(na.e) != len(nb.e):
                raise DimensionMismatch("add operands differ in shape")
        cdef tuple r = self._add(a, b)
        cdef double complex w = r[1]
        v = self.ctab._lookup(w.real, w.imag)
        if _is_zero(v):
            return self.zero
        return (r[0], v)

    cdef tuple _add(self, tuple x, tuple y):
        cdef double complex wx = x[1], wy = y[1], s, rw
        if wx == 0:
            return y
        if wy == 0:
            return x
        cdef Node nx = x[0], ny = y[0]
        if nx is ny:
            s = wx + wy
            if s == 0:
                return self.zero
            return (nx, complex(s))
        s = wy / wx
        cdef object ratio = self.ctab._lookup(s.real, s.imag)
        cdef double complex rt = ratio
        cdef tuple key = (nx, ny, ratio)
        cdef object res = self._add_cache.get(key)
        cdef tuple ex, ey, e0, e1, e2, e3
        if res is None:
            self._tick()
            ex = nx.e
            ey = ny.e
            if len(ex) == 4:
                e0, e1, e2, e3 = ey
                res = self._make_c(nx.level, (
                    self._add(ex[0], (e0[0], complex(<double complex>e0[1] * rt))),
                    self._add(ex[1], (e1[0], complex(<double complex>e1[1] * rt))),
                    self._add(ex[2], (e2[0], complex(<double complex>e2[1] * rt))),
                    self._add(ex[3], (e3[0], complex(<double complex>e3[1] * rt))),
                ))
            else:
                e0, e1 = ey
                res = self._make_c(nx.level, (
                    self._add(ex[0], (e0[0], complex(<double complex>e0[1] * rt))),
                    self._add(ex[1], (e1[0], complex(<double complex>e1[1] * rt))),
                ))
            self._add_cache[key] = res
        rw = (<tuple>res)[1]
        if rw == 0:
            return self.zero
        return ((<tuple>res)[0], complex(rw * wx))

    # -- conjugate transpose -------------------------------------------

    def adjoint(self, tuple a):
        cdef double complex w = a[1], rw
        if w == 0:
            return self.zero
        cdef Node na = a[0]
        if na.level >= 0 and len(na.e) != 4:
            raise DimensionMismatch("adjoint needs a matrix DD")
        cdef tuple r = self._adj(na)
        rw = r[1]
        rw = rw * w.conjugate()
        v = self.ctab._lookup(rw.real, rw.imag)
        if _is_zero(v):
            return self.zero
        return (r[0], v)

    cdef tuple _adj(self, Node node):
        if node.level < 0 or node.ident:
            return (node, self.ctab.one)
        cdef object res = self._adj_cache.get(node)
        if res is not None:
            return <tuple>res
        cdef tuple e = node.e
        cdef list out = []
        cdef tuple edge, r
        cdef double complex w, rw
        cdef int idx
        for idx in (0, 2, 1, 3):
            edge = e[idx]
            w = edge[1]
            if w == 0:
                out.append(self.zero)
            else:
                r = self._adj(<Node>edge[0])
                rw = r[1]
                out.append((r[0], complex(rw * w.conjugate())))
        res = self._make_c(node.level, tuple(out))
        self._adj_cache[node] = res
        return <tuple>res

    # -- inner product -------------------------------------------------

    def inner_product(self, tuple a, tuple b):
        cdef double complex wa = a[1], wb = b[1]
        if wa == 0 or wb == 0:
            return 0j
        cdef Node na = a[0], nb = b[0]
        if na.level != nb.level or len(na.e) != len(nb.e):
            raise DimensionMismatch("inner product operands differ in shape")
        return complex(wa.conjugate() * wb * self._ip(na, nb))

    cdef double complex _ip(self, Node na, Node nb) except *:
        if na.level < 0:
            return 1.0
        cdef tuple key = (na, nb)
        cdef object res = self._ip_cache.get(key)
        if res is not None:
            return <double complex>res
        cdef double complex s = 0, wx, wy
        cdef tuple ea = na.e, eb = nb.e, ex, ey
        cdef Py_ssize_t k
        for k in range(len(ea)):
            ex = ea[k]
            ey = eb[k]
            wx = ex[1]
            wy = ey[1]
            if wx == 0 or wy == 0:
                continue
            s = s + wx.conjugate() * wy * self._ip(<Node>ex[0], <Node>ey[0])
        self._ip_cache[key] = complex(s)
        return s

    # -- size ----------------------------------------------------------

    def node_count(self, tuple e):
        cdef Node root = e[0], node, child
        if root.level < 0 or _is_zero(e[1]):
            return 0
        cdef set seen = {id(root)}
        cdef list stack = [root]
        cdef tuple edge
        while stack:
            node = stack.pop()
            for edge in node.e:
                child = edge[0]
                if child.level >= 0 and id(child) not in seen:
                    seen.add(id(child))
                    stack.append(child)
        return len(seen)
