"""Gate-list circuit representation, gate library, inversion and error injection."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import CircuitError, OverlappingControlTarget, QubitOutOfRange, TooFewGates

_S2 = math.sqrt(0.5)

# kind -> (number of targets, number of params)
GATE_ARITY: dict[str, tuple[int, int]] = {
    "i": (1, 0), "h": (1, 0), "x": (1, 0), "y": (1, 0), "z": (1, 0),
    "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0),
    "sx": (1, 0), "sxdg": (1, 0),
    "rx": (1, 1), "ry": (1, 1), "rz": (1, 1), "p": (1, 1),
    "u2": (1, 2), "u3": (1, 3),
    "swap": (2, 0),
}

_SELF_INVERSE = {"i", "h", "x", "y", "z", "swap"}
_INVERSE_PAIR = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t", "sx": "sxdg", "sxdg": "sx"}


def gate_matrix(kind: str, params=()) -> list[list[complex]]:
    """Local unitary of a gate kind, rows/cols indexed by the target bits.

    For two-target gates the first target is the least significant bit.
    """
    if kind == "i":
        return [[1, 0], [0, 1]]
    if kind == "h":
        return [[_S2, _S2], [_S2, -_S2]]
    if kind == "x":
        return [[0, 1], [1, 0]]
    if kind == "y":
        return [[0, -1j], [1j, 0]]
    if kind == "z":
        return [[1, 0], [0, -1]]
    if kind == "s":
        return [[1, 0], [0, 1j]]
    if kind == "sdg":
        return [[1, 0], [0, -1j]]
    if kind == "t":
        return [[1, 0], [0, complex(_S2, _S2)]]
    if kind == "tdg":
        return [[1, 0], [0, complex(_S2, -_S2)]]
    if kind == "sx":
        return [[0.5 + 0.5j, 0.5 - 0.5j], [0.5 - 0.5j, 0.5 + 0.5j]]
    if kind == "sxdg":
        return [[0.5 - 0.5j, 0.5 + 0.5j], [0.5 + 0.5j, 0.5 - 0.5j]]
    if kind == "rx":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        return [[c, -1j * s], [-1j * s, c]]
    if kind == "ry":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        return [[c, -s], [s, c]]
    if kind == "rz":
        h = params[0] / 2
        return [[cmath.exp(-1j * h), 0], [0, cmath.exp(1j * h)]]
    if kind == "p":
        return [[1, 0], [0, cmath.exp(1j * params[0])]]
    if kind == "u2":
        phi, lam = params
        return [[_S2, -_S2 * cmath.exp(1j * lam)],
                [_S2 * cmath.exp(1j * phi), _S2 * cmath.exp(1j * (phi + lam))]]
    if kind == "u3":
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return [[c, -cmath.exp(1j * lam) * s],
                [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]]
    if kind == "swap":
        return [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    raise CircuitError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        nt, np_ = GATE_ARITY[self.kind]
        if len(self.targets) != nt:
            raise CircuitError(f"{self.kind} takes {nt} target(s), got {len(self.targets)}")
        if len(self.params) != np_:
            raise CircuitError(f"{self.kind} takes {np_} parameter(s), got {len(self.params)}")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise OverlappingControlTarget(
                f"{self.kind}: qubits must be distinct, got targets={self.targets} "
                f"controls={self.controls}")
        if any(q < 0 for q in qubits):
            raise QubitOutOfRange(f"negative qubit index in {self}")
        for p in self.params:
            if not math.isfinite(p):
                raise CircuitError(f"{self.kind}: non-finite parameter {p!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def matrix(self) -> list[list[complex]]:
        return gate_matrix(self.kind, self.params)

    def inverse(self) -> "Gate":
        k, p = self.kind, self.params
        if k in _SELF_INVERSE:
            return self
        if k in _INVERSE_PAIR:
            return Gate(_INVERSE_PAIR[k], self.targets, self.controls)
        if k in ("rx", "ry", "rz", "p"):
            return Gate(k, self.targets, self.controls, (-p[0],))
        if k == "u2":
            # U2(a, b)^-1 = U2(pi - b, pi - a) holds exactly as matrices
            return Gate(k, self.targets, self.controls, (math.pi - p[1], math.pi - p[0]))
        if k == "u3":
            return Gate(k, self.targets, self.controls, (-p[0], -p[2], -p[1]))
        raise CircuitError(f"no inverse for {k!r}")

    def __str__(self) -> str:
        s = self.kind
        if self.params:
            s += "(" + ", ".join(f"{v:.6g}" for v in self.params) + ")"
        if self.controls:
            s += " c" + ",".join(f"q{q}" for q in self.controls) + " ->"
        return s + " " + ",".join(f"q{q}" for q in self.targets)


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise CircuitError(f"a circuit needs at least one qubit, got n={self.n}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if q >= self.n:
                    raise QubitOutOfRange(f"gate {g} touches q{q} but n={self.n}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise CircuitError("cannot concatenate circuits of different width")
        return Circuit(self.n, self.gates + other.gates, self.name)

    def with_gates(self, gates, name: str | None = None) -> "Circuit":
        return Circuit(self.n, tuple(gates), self.name if name is None else name)


def invert(c: Circuit) -> Circuit:
    """Reverse the gate order and invert every gate."""
    return Circuit(c.n, tuple(g.inverse() for g in reversed(c.gates)),
                   c.name + "_inv" if c.name else "")


class XorShift64Star:
    """xorshift64* generator (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D).

    The seed is scrambled with one splitmix64 step so small seeds such as 0
    give a non-degenerate state.
    """

    MASK = (1 << 64) - 1
    MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int = 0):
        z = (int(seed) + 0x9E3779B97F4A7C15) & self.MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & self.MASK
        x ^= x >> 27
        self.state = x
        return (x * self.MULT) & self.MASK

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by masked rejection sampling.

        Bounds wider than 64 bits concatenate several outputs, low word first.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        bits = (bound - 1).bit_length()
        if bits == 0:
            return 0
        words = (bits + 63) // 64
        mask = (1 << bits) - 1
        while True:
            v = 0
            for k in range(words):
                v |= self.next_u64() << (64 * k)
            v &= mask
            if v < bound:
                return v

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def sample(self, population: int, k: int) -> list[int]:
        """``k`` distinct integers from ``range(population)`` in draw order."""
        if k < 0 or k > population:
            raise ValueError(f"cannot draw {k} distinct values from {population}")
        if 2 * k > population:
            pool = list(range(population))
            for i in range(k):
                j = i + self.below(population - i)
                pool[i], pool[j] = pool[j], pool[i]
            return pool[:k]
        seen: set[int] = set()
        out = []
        while len(out) < k:
            v = self.below(population)
            if v not in seen:
                seen.add(v)
                out.append(v)
        return out


def inject_errors(c: Circuit, k: int, seed: int) -> Circuit:
    """Copy of ``c`` with ``k`` distinct, uniformly chosen gates removed."""
    m = len(c.gates)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > m:
        raise TooFewGates(f"cannot remove {k} gates from a circuit with {m}")
    drop = set(XorShift64Star(seed).sample(m, k))
    kept = tuple(g for i, g in enumerate(c.gates) if i not in drop)
    return Circuit(c.n, kept, c.name)


def removed_positions(m: int, k: int, seed: int) -> list[int]:
    """Positions that ``inject_errors`` drops for a circuit of ``m`` gates."""
    return sorted(XorShift64Star(seed).sample(m, k))


_RANDOM_KINDS = sorted(k for k in GATE_ARITY if k != "i")


def random_circuit(n: int, m: int, seed: int, max_controls: int = 2,
                   kinds=None) -> Circuit:
    """Seeded random circuit over the gate library."""
    rng = XorShift64Star(seed)
    pool = list(kinds) if kinds is not None else _RANDOM_KINDS
    gates = []
    while len(gates) < m:
        kind = pool[rng.below(len(pool))]
        nt, np_ = GATE_ARITY[kind]
        if nt > n:
            continue
        nc = rng.below(min(max_controls, n - nt) + 1)
        qs = rng.sample(n, nt + nc)
        params = tuple((rng.uniform() * 2 - 1) * math.pi for _ in range(np_))
        gates.append(Gate(kind, tuple(qs[:nt]), tuple(qs[nt:]), params))
    return Circuit(n, tuple(gates), f"random_{n}_{m}_{seed}")
