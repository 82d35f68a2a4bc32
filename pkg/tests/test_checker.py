import math

import numpy as np
import pytest

from ddequiv.checker import (G2_SIDE, G_SIDE, Outcome, StrategyKind, WitnessKind,
                             affected_columns, check_flow, check_g_i_g, check_reference,
                             check_simulation, extract_counterexample, forward_witness,
                             run_strategy, schedule_naive, schedule_proportional)
from ddequiv.circuit import Circuit, Gate, random_circuit
from ddequiv.dd import new_package
from ddequiv.errors import NotADifference, QubitCountMismatch

from oracle import circuit_unitary, equivalent_up_to_phase

ALL = list(StrategyKind)


def _oracle_fidelity(g, g2, vec):
    a = circuit_unitary(g) @ vec
    b = circuit_unitary(g2) @ vec
    return abs(np.vdot(a, b)) ** 2


def test_schedule_naive():
    assert schedule_naive(2, 4) == [G_SIDE, G2_SIDE, G_SIDE, G2_SIDE, G2_SIDE, G2_SIDE]
    assert schedule_naive(3, 1) == [G_SIDE, G2_SIDE, G_SIDE, G_SIDE]
    assert schedule_naive(0, 0) == []


@pytest.mark.parametrize("m, m2", [(4, 16), (16, 4), (5, 7), (1, 1), (0, 3), (3, 0)])
def test_schedule_proportional_counts_and_ratio(m, m2):
    s = schedule_proportional(m, m2)
    assert s.count(G_SIDE) == m and s.count(G2_SIDE) == m2
    i = j = 0
    for side in s:
        if side == G_SIDE:
            i += 1
        else:
            j += 1
            assert j <= (i * m2 // m if m else m2)


def test_schedule_proportional_reference_pair():
    assert schedule_proportional(4, 16) == ([G_SIDE] + [G2_SIDE] * 4) * 4


@pytest.mark.parametrize("strategy", ALL)
def test_reference_pair_equivalent(backend, g, gp, strategy):
    v = run_strategy(g, gp, strategy, pkg=new_package(backend))
    assert v.outcome is Outcome.EQUIVALENT
    assert v.is_equivalent
    assert v.strategy is strategy


@pytest.mark.parametrize("strategy, avg", [
    (StrategyKind.NAIVE, 4.43), (StrategyKind.PROPORTIONAL, 4.33), (StrategyKind.LOOKAHEAD, 4.24)])
def test_reference_pair_traces(backend, g, gp, strategy, avg):
    st = check_g_i_g(g, gp, strategy, pkg=new_package(backend)).stats
    assert st.max_nodes == 7
    assert st.node_trace[0] == 3 and st.node_trace[-1] == 3
    assert len(st.node_trace) == 21
    assert abs(st.avg_nodes - avg) <= 0.3


def test_lookahead_application_order(g, gp):
    st = check_g_i_g(g, gp, StrategyKind.LOOKAHEAD).stats
    assert st.applied == (["g0", "g2_0", "g1"] + [f"g2_{j}" for j in range(1, 5)]
                          + ["g2", "g3"] + [f"g2_{j}" for j in range(5, 16)])


def test_reference_peaks_at_nine(g, gp):
    st = check_reference(g, gp).stats
    assert st.max_nodes == 9
    assert st.node_trace[-1] == 7


@pytest.mark.parametrize("strategy", ALL)
def test_reference_pair_missing_gate(backend, g, gt, strategy):
    v = run_strategy(g, gt, strategy, pkg=new_package(backend))
    assert v.outcome is Outcome.NOT_EQUIVALENT
    cex = v.counterexample
    assert cex.kind is WitnessKind.BASIS_STATE
    assert cex.indices == (4,)
    assert abs(cex.fidelity - 0.8536) < 1e-3
    assert abs(cex.recheck(g, gt, backend) - cex.fidelity) < 1e-9
    assert abs(_oracle_fidelity(g, gt, cex.input_vector()) - cex.fidelity) < 1e-9
    assert set(cex.output_g) == {2, 6}


def test_difference_dd_gives_relative_phase_pair(pkg, g, gt):
    diff = pkg.multiply(pkg.build_matrix(g), pkg.adjoint(pkg.build_matrix(gt)))
    cex = extract_counterexample(pkg, diff)
    assert cex.kind is WitnessKind.RELATIVE_PHASE_PAIR
    assert cex.indices == (0, 4)
    assert cex.output_g is None


def test_extract_rejects_identity(pkg):
    with pytest.raises(NotADifference):
        extract_counterexample(pkg, pkg.identity(3))


@pytest.mark.parametrize("strategy", ALL)
def test_global_phase_detected(g, strategy):
    # XZXZ = -I
    extra = tuple(Gate(k, (0,)) for k in "xzxz")
    v = run_strategy(g, g.with_gates(g.gates + extra), strategy)
    assert v.outcome is Outcome.EQUIVALENT_UP_TO_GLOBAL_PHASE
    assert math.isclose(v.phase, math.pi, abs_tol=1e-9)
    assert v.is_equivalent


@pytest.mark.parametrize("strategy", ALL)
def test_relative_phase_found(g, strategy):
    # a leading Z only changes relative phases between basis inputs
    g2 = g.with_gates((Gate("z", (2,)),) + g.gates)
    v = run_strategy(g, g2, strategy)
    assert v.outcome is Outcome.NOT_EQUIVALENT
    cex = v.counterexample
    assert cex.kind is not WitnessKind.BASIS_STATE
    assert cex.fidelity < 1 - 1e-6
    assert abs(_oracle_fidelity(g, g2, cex.input_vector()) - cex.fidelity) < 1e-9


def test_forward_witness_all_kinds_verified():
    kinds = set()
    lib = ["h", "s", "t", "x", "z", "rz", "ry"]
    for s in range(60):
        a = random_circuit(2, 4, s, kinds=lib)
        b = random_circuit(2, 4, s + 1000, kinds=lib)
        pkg = new_package()
        diff = pkg.multiply(pkg.build_matrix(a), pkg.adjoint(pkg.build_matrix(b)))
        if pkg.is_identity(diff):
            continue
        for budget in (0, 64):
            cex = forward_witness(pkg, a, b, diff, s, budget)
            kinds.add(cex.kind)
            assert cex.fidelity < 1 - pkg.fid_eps
            assert abs(_oracle_fidelity(a, b, cex.input_vector()) - cex.fidelity) < 1e-9
    assert kinds == set(WitnessKind)


@pytest.mark.parametrize("seed", range(40))
def test_strategies_agree_with_oracle(seed):
    n = 1 + seed % 4
    a = random_circuit(n, 12, seed)
    if seed % 3 == 0:
        b = a.with_gates(a.gates[:5] + a.gates[6:])
    elif seed % 3 == 1:
        b = a.with_gates(a.gates + (Gate("rz", (0,), (), (0.3,)), Gate("p", (0,), (), (-0.3,))))
    else:
        b = random_circuit(n, 12, seed + 500)
    ok, _ = equivalent_up_to_phase(circuit_unitary(a), circuit_unitary(b), 1e-8)
    for strategy in ALL:
        v = run_strategy(a, b, strategy)
        assert v.is_equivalent == ok
        if not ok:
            assert abs(_oracle_fidelity(a, b, v.counterexample.input_vector())
                       - v.counterexample.fidelity) < 1e-9


@pytest.mark.parametrize("strategy", ALL)
def test_timeout_gives_probably_equivalent(g, gt, strategy):
    v = run_strategy(g, gt, strategy, timeout=0)
    assert v.outcome is Outcome.PROBABLY_EQUIVALENT
    assert v.timed_out
    assert not v.is_equivalent


def test_timeout_fires_mid_run():
    c = random_circuit(12, 400, 3, max_controls=4)
    v = check_g_i_g(c, c.with_gates(c.gates[1:]), StrategyKind.NAIVE, timeout=0.05)
    assert v.outcome is Outcome.PROBABLY_EQUIVALENT and v.timed_out
    assert v.stats.t_ec < 5


def test_width_mismatch(g):
    with pytest.raises(QubitCountMismatch):
        check_reference(g, Circuit(4))
    with pytest.raises(QubitCountMismatch):
        check_simulation(g, Circuit(2))


def test_empty_circuits():
    for strategy in ALL:
        assert run_strategy(Circuit(2), Circuit(2), strategy).outcome is Outcome.EQUIVALENT
    v = run_strategy(Circuit(1), Circuit(1, (Gate("x", (0,)),)), StrategyKind.LOOKAHEAD)
    assert v.outcome is Outcome.NOT_EQUIVALENT


def test_simulation_equivalent_is_inconclusive(g, gp):
    v = check_simulation(g, gp, r=16)
    assert v.outcome is Outcome.INCONCLUSIVE
    assert v.stats.num_sims == 8
    assert check_simulation(g, gp, r=0).stats.num_sims == 0
    assert check_simulation(g, gp, r=3).stats.num_sims == 3


def test_simulation_finds_missing_gate(g, gt):
    v = check_simulation(g, gt, r=16, seed=0)
    assert v.outcome is Outcome.NOT_EQUIVALENT
    cex = v.counterexample
    assert cex.kind is WitnessKind.BASIS_STATE
    assert v.stats.num_sims >= 1
    assert abs(_oracle_fidelity(g, gt, cex.input_vector()) - cex.fidelity) < 1e-9


def test_simulation_negative_r(g):
    with pytest.raises(ValueError):
        check_simulation(g, g, r=-1)


def test_simulation_is_deterministic(g, gt):
    a = [check_simulation(g, gt, 2, s).stats.num_sims for s in range(20)]
    b = [check_simulation(g, gt, 2, s).stats.num_sims for s in range(20)]
    assert a == b


def test_flow_stops_after_simulation(g, gt):
    v = check_flow(g, gt, r=16)
    assert v.outcome is Outcome.NOT_EQUIVALENT
    assert v.stats.t_ec == 0
    assert v.stats.t_total >= v.stats.t_sim


def test_flow_runs_complete_check(g, gp):
    v = check_flow(g, gp, r=4, strategy=StrategyKind.LOOKAHEAD)
    assert v.outcome is Outcome.EQUIVALENT
    assert v.stats.num_sims == 4
    assert v.stats.max_nodes == 7
    assert v.stats.t_total >= v.stats.t_sim + v.stats.t_ec - 1e-6


def test_flow_zero_timeout(g, gp):
    v = check_flow(g, gp, timeout=0)
    assert v.outcome is Outcome.PROBABLY_EQUIVALENT
    assert v.timed_out
    assert v.stats.num_sims == 8


def test_flow_catches_what_simulation_misses():
    # the difference only touches |11111>, which r=1 is unlikely to hit
    n = 5
    base = random_circuit(n, 10, 1)
    diff = Gate("z", (0,), tuple(range(1, n)))
    g2 = base.with_gates((diff,) + base.gates)
    v = check_flow(base, g2, r=1, seed=0)
    assert v.outcome is Outcome.NOT_EQUIVALENT


@pytest.mark.parametrize("c", range(5))
def test_affected_columns_controlled_x(c):
    n = 5
    gate = Gate("x", (n - 1,), tuple(range(c))) if c else Gate("x", (n - 1,))
    assert affected_columns(Circuit(n, (gate,))) == 2 ** (n - c)


def test_affected_columns_phase_only():
    assert affected_columns(Circuit(3, (Gate("z", (0,)),))) == 0
    assert affected_columns(Circuit(3, (Gate("h", (1,)),))) == 8
    assert affected_columns(Circuit(3, (Gate("x", (0,), (1, 2)),))) == 2
