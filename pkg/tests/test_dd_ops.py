import math

import numpy as np
import pytest

from oracle import circuit_unitary, gate_unitary
from ddequiv.circuit import Circuit, Gate, random_circuit
from ddequiv.dd import IdentityKind
from ddequiv.errors import DimensionMismatch, OverlappingControlTarget, QubitOutOfRange

S = math.sqrt(0.5)


def test_identity_is_neutral(pkg):
    x = pkg.gate_dd(Gate("x", (1,)), 3)
    assert pkg.multiply(pkg.identity(3), x) == x
    assert pkg.multiply(x, pkg.identity(3)) == x


def test_toffoli_circuit_matrix(pkg, g):
    ref = S * np.array([
        [1, 0, 1, 0, 0, 0, 0, 0], [0, 1, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, -1, 0], [0, 0, 0, 0, 0, 1, 0, -1],
        [0, 1, 0, -1, 0, 0, 0, 0], [1, 0, -1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 1, 0], [0, 0, 0, 0, 0, 1, 0, 1]])
    u = pkg.build_matrix(g)
    assert np.max(np.abs(pkg.to_dense(u) - ref)) < 1e-10
    assert pkg.node_count(u) == 7


def test_unitarity_random(pkg):
    for seed in range(200):
        u = pkg.build_matrix(random_circuit(5, 20, seed))
        assert pkg.is_identity(pkg.multiply(u, pkg.adjoint(u))).kind is IdentityKind.EXACT


def test_associativity(pkg):
    for seed in range(10):
        a, b, c = (pkg.build_matrix(random_circuit(4, 8, 3 * seed + k)) for k in range(3))
        left = pkg.to_dense(pkg.multiply(pkg.multiply(a, b), c))
        right = pkg.to_dense(pkg.multiply(a, pkg.multiply(b, c)))
        assert np.max(np.abs(left - right)) < 1e-9


def test_multiply_matches_dense(pkg):
    rng = np.random.default_rng(3)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    b = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    da, db, dv = pkg.from_dense(a), pkg.from_dense(b), pkg.from_dense(v)
    assert np.allclose(pkg.to_dense(pkg.multiply(da, db)), a @ b, atol=1e-9)
    assert np.allclose(pkg.to_dense(pkg.multiply(da, dv)), a @ v, atol=1e-9)


def test_multiply_dimension_mismatch(pkg):
    with pytest.raises(DimensionMismatch):
        pkg.multiply(pkg.identity(2), pkg.identity(3))
    with pytest.raises(DimensionMismatch):
        pkg.multiply(pkg.basis_state(2, 0), pkg.identity(2))


def test_add_basics(pkg):
    x = pkg.build_matrix(random_circuit(3, 6, 4))
    assert pkg.add(x, pkg.zero) == x
    d = pkg.add(x, x)
    assert d[0] is x[0]
    assert pkg.ctab.approx_eq(d[1], 2 * x[1])


def test_add_matches_dense(pkg):
    rng = np.random.default_rng(5)
    for _ in range(5):
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        b = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        s = pkg.add(pkg.from_dense(a), pkg.from_dense(b))
        assert np.max(np.abs(pkg.to_dense(s) - (a + b))) < 1e-9


def test_add_shape_mismatch(pkg):
    with pytest.raises(DimensionMismatch):
        pkg.add(pkg.identity(2), pkg.basis_state(2, 1))


def test_adjoint(pkg):
    assert pkg.adjoint(pkg.identity(4)) == pkg.identity(4)
    for seed in range(10):
        x = pkg.build_matrix(random_circuit(4, 15, seed))
        xx = pkg.adjoint(pkg.adjoint(x))
        assert xx[0] is x[0] and pkg.ctab.approx_eq(xx[1], x[1])
        assert np.allclose(pkg.to_dense(pkg.adjoint(x)), pkg.to_dense(x).conj().T, atol=1e-10)
    h = pkg.gate_dd(Gate("h", (1,)), 3)
    assert pkg.adjoint(h) == h


def test_h_on_middle_qubit(pkg):
    h = np.array([[1, 1], [1, -1]]) * S
    ref = np.kron(np.kron(np.eye(2), h), np.eye(2))
    assert np.max(np.abs(pkg.to_dense(pkg.gate_dd(Gate("h", (1,)), 3)) - ref)) < 1e-12


def test_cnot_embedding(pkg):
    d = pkg.to_dense(pkg.gate_dd(Gate("x", (2,), (1,)), 3))
    ref = np.zeros((8, 8))
    for col in range(8):
        row = col ^ 4 if col & 2 else col
        ref[row, col] = 1
    assert np.array_equal(d, ref)


def test_single_x(pkg):
    assert np.array_equal(pkg.to_dense(pkg.gate_dd(Gate("x", (0,)), 1)), [[0, 1], [1, 0]])


@pytest.mark.parametrize("kind,params", [
    ("i", ()), ("h", ()), ("x", ()), ("y", ()), ("z", ()), ("s", ()), ("sdg", ()),
    ("t", ()), ("tdg", ()), ("sx", ()), ("sxdg", ()), ("rx", (0.3,)), ("ry", (-1.2,)),
    ("rz", (2.5,)), ("p", (0.7,)), ("u2", (0.4, -0.9)), ("u3", (1.1, 0.2, -2.3)),
    ("swap", ())])
def test_gate_library_vs_oracle(pkg, kind, params):
    nt = 2 if kind == "swap" else 1
    for targets, controls in [((1, 3)[:nt], ()), ((3, 0)[:nt], (2,)), ((0, 1)[:nt], (3, 2))]:
        gate = Gate(kind, targets, controls, params)
        d = pkg.to_dense(pkg.gate_dd(gate, 4))
        assert np.max(np.abs(d - gate_unitary(gate, 4))) < 1e-12


def test_gate_errors(pkg):
    with pytest.raises(QubitOutOfRange):
        pkg.gate_dd(Gate("x", (3,)), 3)
    with pytest.raises(OverlappingControlTarget):
        Gate("x", (1,), (1,))


def test_fidelity_basics(pkg):
    x = pkg.simulate(random_circuit(3, 10, 1), 5)
    assert math.isclose(pkg.fidelity(x, x), 1.0, abs_tol=1e-12)
    assert pkg.fidelity(pkg.basis_state(3, 0), pkg.basis_state(3, 1)) == 0
    with pytest.raises(DimensionMismatch):
        pkg.fidelity(pkg.basis_state(3, 0), pkg.basis_state(2, 0))


def test_fidelity_symmetric(pkg):
    for seed in range(20):
        a = pkg.simulate(random_circuit(4, 12, seed), seed % 16)
        b = pkg.simulate(random_circuit(4, 12, seed + 100), seed % 16)
        f1, f2 = pkg.fidelity(a, b), pkg.fidelity(b, a)
        assert abs(f1 - f2) < 1e-10 and 0 <= f1 <= 1


def test_example_fidelity_is_squared_overlap(pkg, g, gt):
    f = pkg.fidelity(pkg.simulate(g, 4), pkg.simulate(gt, 4))
    assert abs(f - 0.8536) < 1e-3
    assert abs(math.sqrt(f) - 0.92) < 5e-3


def test_simulate_example(pkg, g):
    v = pkg.to_dense(pkg.simulate(g, 4))
    ref = np.zeros(8)
    ref[[2, 6]] = S
    assert np.max(np.abs(v - ref)) < 1e-10


def test_simulate_empty(pkg):
    c = Circuit(3, ())
    for i in range(8):
        assert pkg.simulate(c, i) == pkg.basis_state(3, i)
    with pytest.raises(IndexError):
        pkg.simulate(c, 8)


def test_simulate_columns_match(pkg):
    for seed in range(10):
        c = random_circuit(5, 20, seed)
        u = circuit_unitary(c)
        for i in range(0, 32, 3):
            assert np.max(np.abs(pkg.to_dense(pkg.simulate(c, i)) - u[:, i])) < 1e-9


def test_build_empty(pkg):
    assert pkg.build_matrix(Circuit(3, ())) == pkg.identity(3)


def test_reference_build_peak(pkg, g, gp):
    peak = 0
    for c in (g, gp):
        e = pkg.identity(3)
        for gate in c.gates:
            e = pkg.multiply(pkg.gate_dd(gate, 3), e)
            peak = max(peak, pkg.node_count(e))
    assert peak == 9


def test_superposition_and_amplitudes(pkg):
    v = pkg.superposition(3, 1, 6)
    amps = pkg.amplitudes(v)
    assert list(amps) == [1, 6]
    assert all(abs(a - S) < 1e-12 for a in amps.values())
