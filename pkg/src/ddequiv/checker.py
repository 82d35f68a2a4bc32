"""Equivalence checking of two circuits over a shared qubit register.

Four routines are provided:

* ``check_reference`` builds both system matrices and compares root edges.
* ``check_g_i_g`` starts from the identity and applies gates of ``g`` from
  the left and inverted gates of ``g2`` from the right, keeping the working
  DD close to the identity when both circuits agree.  The interleaving is
  chosen by a strategy (naive, proportional or lookahead).
* ``check_simulation`` compares both circuits on a few random basis states.
* ``check_flow`` runs the simulations first and falls back to one of the
  complete routines when they all pass.

All routines return a ``Verdict``.  A ``NOT_EQUIVALENT`` verdict always carries
a ``Counterexample`` that has been confirmed by forward simulation.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, XorShift64Star, invert
from .dd import DEFAULT_FID_EPS, IdentityKind, Package, new_package
from .errors import NotADifference, QubitCountMismatch, ResourceLimit


class Outcome(enum.Enum):
    EQUIVALENT = "equivalent"
    EQUIVALENT_UP_TO_GLOBAL_PHASE = "equivalent_up_to_global_phase"
    NOT_EQUIVALENT = "not_equivalent"
    PROBABLY_EQUIVALENT = "probably_equivalent"
    INCONCLUSIVE = "inconclusive"

    @property
    def is_equivalent(self) -> bool:
        return self in (Outcome.EQUIVALENT, Outcome.EQUIVALENT_UP_TO_GLOBAL_PHASE)


class StrategyKind(enum.Enum):
    REFERENCE = "reference"
    NAIVE = "naive"
    PROPORTIONAL = "proportional"
    LOOKAHEAD = "lookahead"


class WitnessKind(enum.Enum):
    BASIS_STATE = "basis_state"
    RELATIVE_PHASE_PAIR = "relative_phase_pair"
    PREPARED_STATE = "prepared_state"


@dataclass
class Counterexample:
    """An input on which the two circuits produce distinguishable outputs.

    ``indices`` is ``(i,)`` for a basis state and ``(i, j)`` for the
    superposition ``(|i> + |j>)/sqrt(2)``.  A prepared state has no indices;
    its amplitudes are kept in ``input_state``.  Output states are sparse
    ``{basis index: amplitude}`` maps; they stay ``None`` when only the
    difference DD was analysed.
    """

    kind: WitnessKind
    indices: tuple[int, ...]
    fidelity: float
    n: int
    input_state: dict[int, complex] | None = None
    output_g: dict[int, complex] | None = None
    output_g2: dict[int, complex] | None = None

    def describe(self) -> str:
        if self.kind is WitnessKind.BASIS_STATE:
            return f"|{self.indices[0]:0{self.n}b}>"
        if self.kind is WitnessKind.RELATIVE_PHASE_PAIR:
            i, j = self.indices
            return f"(|{i:0{self.n}b}> + |{j:0{self.n}b}>)/sqrt(2)"
        return "prepared state (see input_state)"

    def input_vector(self) -> np.ndarray:
        v = np.zeros(1 << self.n, dtype=complex)
        if self.kind is WitnessKind.BASIS_STATE:
            v[self.indices[0]] = 1
        elif self.kind is WitnessKind.RELATIVE_PHASE_PAIR:
            v[list(self.indices)] = math.sqrt(0.5)
        else:
            for k, a in (self.input_state or {}).items():
                v[k] = a
        return v

    def recheck(self, g: Circuit, g2: Circuit, backend: str | None = None) -> float:
        """Recompute the output fidelity in a fresh package."""
        pkg = new_package(backend)
        v = _input_dd(pkg, self)
        return pkg.fidelity(pkg.apply(g, v), pkg.apply(g2, v))


@dataclass
class Stats:
    num_sims: int = 0
    t_sim: float = 0.0
    t_ec: float = 0.0
    t_total: float = 0.0
    max_nodes: int = 0
    avg_nodes: float = 0.0
    node_trace: list[int] = field(default_factory=list)
    applied: list[str] = field(default_factory=list)

    def record(self, count: int, label: str | None = None) -> None:
        self.node_trace.append(count)
        if label is not None:
            self.applied.append(label)

    def finish_trace(self) -> None:
        if self.node_trace:
            self.max_nodes = max(self.node_trace)
            self.avg_nodes = sum(self.node_trace) / len(self.node_trace)


@dataclass
class Verdict:
    outcome: Outcome
    strategy: StrategyKind | None = None
    phase: float | None = None
    counterexample: Counterexample | None = None
    stats: Stats = field(default_factory=Stats)
    timed_out: bool = False

    @property
    def is_equivalent(self) -> bool:
        return self.outcome.is_equivalent


# -- schedules ---------------------------------------------------------------

G_SIDE = 0
G2_SIDE = 1


def schedule_naive(m: int, m2: int) -> list[int]:
    """Alternate G, G' while both have gates left, then append the rest."""
    out = []
    for k in range(max(m, m2)):
        if k < m:
            out.append(G_SIDE)
        if k < m2:
            out.append(G2_SIDE)
    return out


def schedule_proportional(m: int, m2: int) -> list[int]:
    """After the i-th gate of G, catch G' up to ``floor(i * m2 / m)`` gates."""
    if m == 0:
        return [G2_SIDE] * m2
    out = []
    done = 0
    for i in range(1, m + 1):
        out.append(G_SIDE)
        target = i * m2 // m
        out.extend([G2_SIDE] * (target - done))
        done = target
    return out


def _check_widths(g: Circuit, g2: Circuit) -> None:
    if g.n != g2.n:
        raise QubitCountMismatch(f"circuits act on {g.n} and {g2.n} qubits")


def _classify(pkg: Package, e: tuple) -> tuple[Outcome, float | None]:
    res = pkg.is_identity(e)
    if res.kind is IdentityKind.EXACT:
        return Outcome.EQUIVALENT, None
    if res.kind is IdentityKind.GLOBAL_PHASE:
        return Outcome.EQUIVALENT_UP_TO_GLOBAL_PHASE, res.phase
    return Outcome.NOT_EQUIVALENT, None


# -- counterexamples ------------------------------------------------------------

def extract_counterexample(pkg: Package, diff: tuple, n: int | None = None) -> Counterexample:
    """Read a witness off the diagonal of a difference matrix DD.

    Returns the basis state with the smallest diagonal modulus when that
    modulus is visibly below one.  When every diagonal entry has unit modulus
    the difference is a relative phase, and the pair ``(0, j)`` is returned
    where ``j`` is the first index whose diagonal entry differs from entry 0.
    The reported fidelity is the one the witness gets under ``diff``.
    """
    node, w = diff
    if n is None:
        n = node.level + 1
    check = pkg.is_identity(diff)
    if check:
        raise NotADifference(f"difference is the identity ({check.kind.value})")
    if node.level < 0:
        raise NotADifference("a scalar cannot witness a difference")
    info = pkg.diag_info(node)
    wmod2 = abs(w) ** 2
    if info.minmod2 * wmod2 < 1 - pkg.fid_eps:
        return Counterexample(WitnessKind.BASIS_STATE, (info.argmin,),
                              info.minmod2 * wmod2, n)
    d0 = w * _diag_entry(node, 0)
    j = pkg.first_diff(node, d0, w)
    if j is None:
        raise NotADifference("constant diagonal of unit modulus")
    dj = w * _diag_entry(node, j)
    return Counterexample(WitnessKind.RELATIVE_PHASE_PAIR, (0, j),
                          abs((d0 + dj) / 2) ** 2, n)


def _diag_entry(node, i: int) -> complex:
    acc = 1 + 0j
    while node.level >= 0:
        child, w = node.e[3 if (i >> node.level) & 1 else 0]
        if w == 0:
            return 0j
        acc *= w
        node = child
    return acc


def _input_dd(pkg: Package, cex: Counterexample) -> tuple:
    if cex.kind is WitnessKind.BASIS_STATE:
        return pkg.basis_state(cex.n, cex.indices[0])
    if cex.kind is WitnessKind.RELATIVE_PHASE_PAIR:
        return pkg.superposition(cex.n, *cex.indices)
    return pkg.from_dense(cex.input_vector())


def _confirm(pkg: Package, g: Circuit, g2: Circuit, cex: Counterexample,
             v: tuple | None = None) -> Counterexample | None:
    """Fill in outputs and fidelity from forward simulation; None if not a witness."""
    if v is None:
        v = _input_dd(pkg, cex)
    out1 = pkg.apply(g, v)
    out2 = pkg.apply(g2, v)
    f = pkg.fidelity(out1, out2)
    if f >= 1 - pkg.fid_eps:
        return None
    cex.fidelity = f
    cex.input_state = pkg.amplitudes(v)
    cex.output_g = pkg.amplitudes(out1)
    cex.output_g2 = pkg.amplitudes(out2)
    return cex


def forward_witness(pkg: Package, g: Circuit, g2: Circuit, diff: tuple,
                    seed: int = 0, budget: int = 64) -> Counterexample:
    """Turn the difference ``U U'^dagger`` into a confirmed input witness.

    Candidates read off ``diff`` are tried first, then a seeded random scan
    of basis states (which may also reveal a relative-phase pair).  If both
    fail, the input ``U'^dagger |phi>`` is prepared, where ``|phi>`` is the
    witness of ``diff``; its fidelity equals ``|<phi|diff|phi>|^2 < 1``.
    """
    n = g.n
    diff_cex = extract_counterexample(pkg, diff, n)
    tried: set[int] = set()
    for i in reversed(diff_cex.indices):
        tried.add(i)
        cex = _confirm(pkg, g, g2, Counterexample(WitnessKind.BASIS_STATE, (i,), 0.0, n))
        if cex is not None:
            return cex
    rng = XorShift64Star(seed)
    overlaps: dict[int, complex] = {}
    for i in rng.sample(1 << n, min(budget, 1 << n)):
        if i in tried:
            continue
        v = pkg.basis_state(n, i)
        o = pkg.inner_product(pkg.apply(g, v), pkg.apply(g2, v))
        if abs(o) ** 2 < 1 - pkg.fid_eps:
            return _confirm(pkg, g, g2,
                            Counterexample(WitnessKind.BASIS_STATE, (i,), 0.0, n), v)
        overlaps[i] = o
    items = sorted(overlaps.items())
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            (i, oi), (j, oj) = items[a], items[b]
            if abs(oi - oj) > math.sqrt(pkg.fid_eps):
                cex = _confirm(pkg, g, g2,
                               Counterexample(WitnessKind.RELATIVE_PHASE_PAIR, (i, j), 0.0, n))
                if cex is not None:
                    return cex
    phi = _input_dd(pkg, diff_cex)
    v = pkg.apply(invert(g2), phi)
    cex = _confirm(pkg, g, g2, Counterexample(WitnessKind.PREPARED_STATE, (), 0.0, n), v)
    if cex is None:
        raise NotADifference("difference could not be confirmed by simulation")
    return cex


# -- complete routines ------------------------------------------------------------

def _package(pkg: Package | None, eps: float, fid_eps: float) -> Package:
    return Package(eps, fid_eps) if pkg is None else pkg


def check_reference(g: Circuit, g2: Circuit, *, timeout: float | None = None,
                    pkg: Package | None = None, eps: float = 1e-10,
                    fid_eps: float = DEFAULT_FID_EPS, seed: int = 0) -> Verdict:
    """Build both system matrices and compare their root edges."""
    _check_widths(g, g2)
    pkg = _package(pkg, eps, fid_eps)
    verdict = Verdict(Outcome.EQUIVALENT, StrategyKind.REFERENCE)
    stats = verdict.stats
    t0 = time.monotonic()
    pkg.set_timeout(timeout)
    try:
        pkg.check_deadline()
        built = []
        for c in (g, g2):
            e = pkg.identity(c.n)
            stats.record(pkg.node_count(e))
            for k, gate in enumerate(c.gates):
                pkg.check_deadline()
                e = pkg.multiply(pkg.gate_dd(gate, c.n), e)
                stats.record(pkg.node_count(e), f"{'g' if c is g else 'g2'}{k}")
            built.append(e)
        u, u2 = built
        if u[0] is u2[0] and abs(abs(u[1]) - abs(u2[1])) < pkg.fid_eps:
            ratio = u[1] / u2[1]
            if pkg.ctab.approx_eq(ratio, 1 + 0j):
                verdict.outcome = Outcome.EQUIVALENT
            else:
                verdict.outcome = Outcome.EQUIVALENT_UP_TO_GLOBAL_PHASE
                verdict.phase = math.atan2(ratio.imag, ratio.real) % (2 * math.pi)
        else:
            diff = pkg.multiply(u, pkg.adjoint(u2))
            verdict.outcome, verdict.phase = _classify(pkg, diff)
            if verdict.outcome is Outcome.NOT_EQUIVALENT:
                verdict.counterexample = forward_witness(pkg, g, g2, diff, seed)
    except ResourceLimit:
        verdict.outcome = Outcome.PROBABLY_EQUIVALENT
        verdict.timed_out = True
    finally:
        pkg.set_timeout(None)
    stats.t_ec = time.monotonic() - t0
    stats.t_total = stats.t_ec
    stats.finish_trace()
    return verdict


def step_lookahead(pkg: Package, e: tuple, left_dd: tuple, right_dd: tuple) -> tuple[int, tuple, int]:
    """Try both sides and keep the smaller product (ties go to G).

    Returns ``(side, product, node count)``.
    """
    left = pkg.multiply(left_dd, e)
    right = pkg.multiply(e, right_dd)
    nl = pkg.node_count(left)
    nr = pkg.node_count(right)
    if nr < nl:
        return G2_SIDE, right, nr
    return G_SIDE, left, nl


def check_g_i_g(g: Circuit, g2: Circuit, strategy: StrategyKind = StrategyKind.PROPORTIONAL,
                *, timeout: float | None = None, pkg: Package | None = None,
                eps: float = 1e-10, fid_eps: float = DEFAULT_FID_EPS,
                seed: int = 0) -> Verdict:
    """Accumulate ``U`` from the left and ``U'^dagger`` from the right onto the identity."""
    _check_widths(g, g2)
    if strategy is StrategyKind.REFERENCE:
        raise ValueError("use check_reference for the reference strategy")
    pkg = _package(pkg, eps, fid_eps)
    n = g.n
    m, m2 = len(g.gates), len(g2.gates)
    verdict = Verdict(Outcome.EQUIVALENT, strategy)
    stats = verdict.stats
    t0 = time.monotonic()
    pkg.set_timeout(timeout)
    try:
        pkg.check_deadline()
        e = pkg.identity(n)
        stats.record(pkg.node_count(e))

        def left(j):
            return pkg.gate_dd(g.gates[j], n)

        def right(j):
            return pkg.gate_dd(g2.gates[j].inverse(), n)

        if strategy is StrategyKind.LOOKAHEAD:
            i = j = 0
            while i < m or j < m2:
                pkg.check_deadline()
                if i < m and j < m2:
                    side, e, cnt = step_lookahead(pkg, e, left(i), right(j))
                elif i < m:
                    side = G_SIDE
                    e = pkg.multiply(left(i), e)
                    cnt = pkg.node_count(e)
                else:
                    side = G2_SIDE
                    e = pkg.multiply(e, right(j))
                    cnt = pkg.node_count(e)
                if side == G_SIDE:
                    stats.record(cnt, f"g{i}")
                    i += 1
                else:
                    stats.record(cnt, f"g2_{j}")
                    j += 1
        else:
            sched = (schedule_naive if strategy is StrategyKind.NAIVE
                     else schedule_proportional)(m, m2)
            i = j = 0
            for side in sched:
                pkg.check_deadline()
                if side == G_SIDE:
                    e = pkg.multiply(left(i), e)
                    stats.record(pkg.node_count(e), f"g{i}")
                    i += 1
                else:
                    e = pkg.multiply(e, right(j))
                    stats.record(pkg.node_count(e), f"g2_{j}")
                    j += 1
        verdict.outcome, verdict.phase = _classify(pkg, e)
        if verdict.outcome is Outcome.NOT_EQUIVALENT:
            verdict.counterexample = forward_witness(pkg, g, g2, e, seed)
    except ResourceLimit:
        verdict.outcome = Outcome.PROBABLY_EQUIVALENT
        verdict.timed_out = True
    finally:
        pkg.set_timeout(None)
    stats.t_ec = time.monotonic() - t0
    stats.t_total = stats.t_ec
    stats.finish_trace()
    return verdict


def run_strategy(g: Circuit, g2: Circuit, strategy: StrategyKind, **kw) -> Verdict:
    if strategy is StrategyKind.REFERENCE:
        return check_reference(g, g2, **kw)
    return check_g_i_g(g, g2, strategy, **kw)


# -- simulation ----------------------------------------------------------------

def check_simulation(g: Circuit, g2: Circuit, r: int = 16, seed: int = 0, *,
                     pkg: Package | None = None, eps: float = 1e-10,
                     fid_eps: float = DEFAULT_FID_EPS) -> Verdict:
    """Compare outputs on ``min(r, 2**n)`` distinct random basis states.

    Stops at the first state whose output fidelity falls below ``1 - fid_eps``;
    the reported simulation count includes that run.
    """
    _check_widths(g, g2)
    if r < 0:
        raise ValueError("r must be non-negative")
    pkg = _package(pkg, eps, fid_eps)
    verdict = Verdict(Outcome.INCONCLUSIVE)
    stats = verdict.stats
    t0 = time.monotonic()
    n = g.n
    for i in XorShift64Star(seed).sample(1 << n, min(r, 1 << n)):
        stats.num_sims += 1
        v = pkg.basis_state(n, i)
        out1 = pkg.apply(g, v)
        out2 = pkg.apply(g2, v)
        f = pkg.fidelity(out1, out2)
        if f < 1 - pkg.fid_eps:
            verdict.outcome = Outcome.NOT_EQUIVALENT
            verdict.counterexample = Counterexample(
                WitnessKind.BASIS_STATE, (i,), f, n, {i: 1 + 0j},
                pkg.amplitudes(out1), pkg.amplitudes(out2))
            break
    stats.t_sim = time.monotonic() - t0
    stats.t_total = stats.t_sim
    return verdict


def check_flow(g: Circuit, g2: Circuit, r: int = 16,
               strategy: StrategyKind = StrategyKind.PROPORTIONAL, seed: int = 0,
               timeout: float | None = 3600.0, *, eps: float = 1e-10,
               fid_eps: float = DEFAULT_FID_EPS, backend: str | None = None) -> Verdict:
    """Random simulations first, then a complete check bounded by ``timeout``.

    The timeout covers the complete check only.  If it fires after all
    simulations passed the verdict is ``PROBABLY_EQUIVALENT``.
    """
    _check_widths(g, g2)
    t0 = time.monotonic()
    pkg = new_package(backend, eps, fid_eps)
    sim = check_simulation(g, g2, r, seed, pkg=pkg)
    if sim.outcome is Outcome.NOT_EQUIVALENT:
        sim.strategy = strategy
        sim.stats.t_total = time.monotonic() - t0
        return sim
    pkg.gc()
    verdict = run_strategy(g, g2, strategy, timeout=timeout, pkg=pkg, seed=seed)
    verdict.stats.num_sims = sim.stats.num_sims
    verdict.stats.t_sim = sim.stats.t_sim
    verdict.stats.t_total = time.monotonic() - t0
    return verdict


# -- column analysis ------------------------------------------------------------

def affected_columns(diff_circuit: Circuit, *, pkg: Package | None = None,
                     fid_eps: float = DEFAULT_FID_EPS) -> int:
    """Number of basis states ``|i>`` that the circuit does not map to a phase times ``|i>``."""
    if not diff_circuit.gates:
        raise ValueError("affected_columns needs a non-empty circuit")
    pkg = _package(pkg, 1e-10, fid_eps)
    e = pkg.build_matrix(diff_circuit)
    thr = 1 - fid_eps
    memo: dict = {}

    def count(node, mod2):
        # entries below ``node`` scaled by an incoming weight of squared modulus mod2
        if node.level < 0:
            return 1 if mod2 < thr else 0
        size = 1 << (node.level + 1)
        d = pkg.diag_info(node)
        if d.minmod2 * mod2 >= thr:
            return 0
        if d.const is not None:
            return size if abs(d.const) ** 2 * mod2 < thr else 0
        key = (node, round(mod2, 12))
        r = memo.get(key)
        if r is not None:
            return r
        r = 0
        for child, w in (node.e[0], node.e[3]):
            r += size // 2 if w == 0 else count(child, mod2 * abs(w) ** 2)
        memo[key] = r
        return r

    node, w = e
    if w == 0:
        return 1 << diff_circuit.n
    return count(node, abs(w) ** 2)
