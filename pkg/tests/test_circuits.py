import numpy as np
import pytest
from hypothesis import given, strategies as st

from ragetn.circuits import (
    HADAMARD,
    Circuit,
    Gate,
    GateTarget,
    apply_controlled_phase,
    apply_gate_dense,
    apply_gate_incremental,
    apply_single_qubit_variational,
    circuit_unitary,
    incremental_gate_schedule,
    mps_apply_gate,
    phase_gate_matrix,
    plus_rage_state,
    qft_circuit,
    random_circuit,
    random_circuit_study,
    run_dense,
    simulate_with_fidelity,
    trotter_circuit,
    update_adjacency_row,
)
from ragetn.exact_oracle import StateVector, expand, fidelity, hamiltonian_matrix
from ragetn.hamiltonians import ising_2d
from ragetn.mps import random_mps
from ragetn.rage import RageState, graph_rage_state
from ragetn.wgs import AdjacencyPhases, LocalRotations, graph_state_phases


def dense_after(r, gate):
    return StateVector(apply_gate_dense(expand(r).tensor(), gate).reshape(-1), r.n_sites)


def random_unitary(rng):
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(m)
    return q


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate.single(0, np.ones((2, 2)))
    with pytest.raises(ValueError):
        Gate.cphase(1, 1, 0.3)
    with pytest.raises(ValueError):
        Circuit(2, (Gate.single(2, HADAMARD),))
    assert Gate.cphase(0, 1, 2 * np.pi + 0.5).angle == pytest.approx(0.5)


def test_random_circuit_shape():
    c = random_circuit(5, 7, seed=3)
    assert len(c) == 14
    assert [g.kind for g in c.gates[:2]] == ["single", "cphase"]
    assert np.array_equal(circuit_unitary(random_circuit(5, 7, seed=3)), circuit_unitary(c))


def test_qft_single_site_and_dft():
    c1 = qft_circuit(1)
    assert len(c1) == 1 and np.allclose(c1.gates[0].matrix, HADAMARD)
    n = 4
    dim = 2 ** n
    f = np.exp(2j * np.pi * np.outer(np.arange(dim), np.arange(dim)) / dim) / np.sqrt(dim)
    rev = [int(format(i, f"0{n}b")[::-1], 2) for i in range(dim)]
    assert np.allclose(circuit_unitary(qft_circuit(n)), f[rev, :])


def test_trotter_zero_dt_identity():
    c = trotter_circuit(ising_2d(3, 1), 0.0, 4)
    assert np.allclose(circuit_unitary(c), np.eye(8))


def test_trotter_first_order_error():
    from scipy.linalg import expm

    h = ising_2d(4, 1, 1.0, 0.7)
    exact = expm(-1j * hamiltonian_matrix(h) * 0.4)
    errs = []
    for steps in (10, 20):
        u = circuit_unitary(trotter_circuit(h, 0.4 / steps, steps))
        errs.append(np.linalg.norm(u - exact, 2))
    assert errs[0] / errs[1] == pytest.approx(2, rel=0.05)


def test_trotter_single_zz_step_exact():
    from scipy.linalg import expm

    h = ising_2d(2, 1, 0.8, 0.0)
    u = circuit_unitary(trotter_circuit(h, 0.3, 1))
    assert np.allclose(u, expm(-1j * hamiltonian_matrix(h) * 0.3))


def test_cphase_zero_and_graph():
    r = plus_rage_state(2)
    assert np.allclose(expand(apply_controlled_phase(r, Gate.cphase(0, 1, 0.0))).amplitudes,
                       expand(r).amplitudes)
    g = apply_controlled_phase(r, Gate.cphase(0, 1, np.pi))
    assert np.allclose(expand(g).amplitudes, np.array([1, 1, 1, -1]) / 2)


@given(st.integers(2, 6), st.floats(0, 2 * np.pi), st.integers(0, 10_000))
def test_cphase_absorption_exact(n, angle, seed):
    r = RageState(random_mps(n, 2, seed=seed), AdjacencyPhases.random(n, 2, seed))
    rng = np.random.default_rng(seed)
    a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
    gate = Gate.cphase(a, b, angle)
    assert fidelity(expand(apply_controlled_phase(r, gate)), dense_after(r, gate)) == pytest.approx(1, abs=1e-12)


def test_single_qubit_identity_gate():
    r = RageState(random_mps(4, 2, seed=1), AdjacencyPhases.random(4, 2, 1))
    out, bound = apply_single_qubit_variational(r, Gate.single(2, np.eye(2)), 2)
    assert bound == pytest.approx(1)
    assert fidelity(expand(out), expand(r)) == pytest.approx(1)


def test_diagonal_gate_absorbed_exactly():
    r = RageState(random_mps(4, 2, seed=2), AdjacencyPhases.random(4, 2, 2))
    g = Gate.single(1, phase_gate_matrix(0.7))
    out, bound = apply_single_qubit_variational(r, g, 2)
    assert bound == 1.0
    assert fidelity(expand(out), dense_after(r, g)) == pytest.approx(1)


def test_rotations_rejected():
    r = RageState(random_mps(3, 2), AdjacencyPhases.zeros(3), LocalRotations.random(3, 0))
    with pytest.raises(ValueError):
        apply_single_qubit_variational(r, Gate.single(0, HADAMARD), 2)


def test_hadamard_on_ring_graph_state():
    edges = [(k, (k + 1) % 6) for k in range(6)]
    g = Gate.single(0, HADAMARD)
    for d, expected in ((1, 0.5), (2, 1.0)):
        r = graph_rage_state(edges, 6, bond_dim=d)
        out, bound = apply_single_qubit_variational(r, g, d)
        f = fidelity(expand(out), dense_after(r, g))
        assert f == pytest.approx(expected, abs=1e-8)
        assert bound == pytest.approx(f, abs=1e-8)


@given(st.integers(3, 6), st.integers(0, 10_000))
def test_variational_bound_matches_oracle(n, seed):
    rng = np.random.default_rng(seed)
    r = RageState(random_mps(n, 2, seed=seed), AdjacencyPhases.random(n, 2, seed))
    g = Gate.single(int(rng.integers(n)), random_unitary(rng))
    out, bound = apply_single_qubit_variational(r, g, 2, row_updates=bool(seed % 2))
    f = fidelity(expand(out), dense_after(r, g))
    assert bound == pytest.approx(f, abs=1e-8)
    assert 0 <= f <= 1 + 1e-12


def test_row_update_recovers_target_phase():
    n = 4
    base = RageState(random_mps(n, 2, seed=5), AdjacencyPhases.random(n, 2, 5))
    target_phases = base.phases.shifted(1, 3, 0.77)
    target = GateTarget(base.backbone, target_phases, 1, np.eye(2))
    out, bound = update_adjacency_row(base, 1, 3, target)
    assert bound == pytest.approx(1, abs=1e-10)
    assert out.phases.get(1, 3) == pytest.approx(target_phases.get(1, 3), abs=1e-9)


def test_row_update_no_change_at_optimum():
    r = RageState(random_mps(4, 2, seed=6), AdjacencyPhases.random(4, 2, 6))
    target = GateTarget(r.backbone, r.phases, 0, np.eye(2))
    out, bound = update_adjacency_row(r, 0, 2, target)
    assert out.phases.get(0, 2) == pytest.approx(r.phases.get(0, 2))
    assert bound == pytest.approx(1)
    with pytest.raises(ValueError):
        update_adjacency_row(r, 0, 0, target)


def test_incremental_schedule():
    pieces = incremental_gate_schedule(np.eye(2), 4)
    assert all(np.allclose(p, np.eye(2)) for p in pieces)
    pieces = incremental_gate_schedule(HADAMARD, 8)
    acc = np.eye(2)
    for p in pieces:
        acc = p @ acc
    assert np.allclose(acc, HADAMARD)
    with pytest.raises(ValueError):
        incremental_gate_schedule(HADAMARD, 0)


def test_incremental_hadamard_not_worse_than_single_shot():
    # paired seeds on 8 qubits: fractional Hadamards with row updates versus one update
    n, wins, seeds = 8, 0, range(10)
    g = Gate.single(3, HADAMARD)
    for s in seeds:
        r = RageState(random_mps(n, 2, seed=s), AdjacencyPhases.random(n, 2, s))
        ref = dense_after(r, g)
        single, _ = apply_single_qubit_variational(r, g, 2)
        inc, bound = apply_gate_incremental(r, g, 8, 2)
        f_inc = fidelity(expand(inc), ref)
        assert bound == pytest.approx(f_inc, abs=1e-8)
        wins += f_inc >= fidelity(expand(single), ref) - 1e-12
    assert wins >= 0.6 * len(seeds)


def test_mps_gate_cphase_within_bond():
    m = random_mps(4, 2, seed=1)
    g = Gate.cphase(1, 2, 0.9)
    out, fid = mps_apply_gate(m, g, 4)
    ref = StateVector(apply_gate_dense(expand(m).tensor(), g).reshape(-1), 4)
    assert fidelity(expand(out), ref) == pytest.approx(1)


def test_diagonal_circuit_fidelity_one():
    gates = tuple(Gate.single(k, phase_gate_matrix(0.3 * k + 0.1)) for k in range(4))
    tr = simulate_with_fidelity(Circuit(4, gates), plus_rage_state(4, 2), max_bond=2)
    assert np.allclose(tr["mps"], 1) and np.allclose(tr["rage"], 1)


def test_run_dense_matches_unitary():
    c = random_circuit(4, 3, seed=2)
    psi = expand(plus_rage_state(4))
    assert np.allclose(run_dense(c, psi).amplitudes, circuit_unitary(c) @ psi.amplitudes)


def test_circuit_study_small():
    study = random_circuit_study(6, 4, range(3), 2)
    assert len(study.mean["rage"]) == 4
    assert np.allclose(study.cphase_fidelities, 1)
    assert all(r >= m - 1e-12 for r, m in zip(study.mean["rage"], study.mean["mps"]))
