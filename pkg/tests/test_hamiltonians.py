import numpy as np
import pytest

from ragetn.exact_oracle import exact_ground_state, expand, exact_expectation
from ragetn.hamiltonians import (
    HamiltonianSum,
    LocalOperator,
    PauliString,
    disturbed_graph_hamiltonian,
    graph_hamiltonian,
    heisenberg_2d,
    ising_2d,
    kitaev_perturbed,
    lattice_edges,
    long_range_ising,
    random_local_hamiltonian,
    spin_glass_2d,
    toric_code_hamiltonian,
)
from ragetn.rage import graph_rage_state

RING4 = [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_pauli_string_validation():
    with pytest.raises(ValueError):
        PauliString("XQ", 1.0)
    p = PauliString.from_sites(4, {1: "X", 3: "Z"}, 2.0)
    assert p.letters == "IXIZ" and p.support == (1, 3)


def test_ising_pair():
    h = ising_2d(1, 2, 1.0, 0.0)
    assert sum(1 for t in h.terms if t.coeff != 0 and t.support == (0, 1)) == 1
    assert exact_ground_state(h).energy == pytest.approx(-1)


def test_heisenberg_singlet_and_term_count():
    assert exact_ground_state(heisenberg_2d(1, 2)).energy == pytest.approx(-3)
    h = heisenberg_2d(2, 3)
    assert len(h.terms) == 3 * len(lattice_edges(2, 3, False))


def test_heisenberg_periodic_2x2_regression():
    # 2x2 periodic wraps onto the 4-ring; the antiferromagnetic ring has E0 = -8 in Pauli units
    assert exact_ground_state(heisenberg_2d(2, 2, periodic=True)).energy == pytest.approx(-8.0, abs=1e-10)


def test_spin_glass_seeded():
    a, b = spin_glass_2d(3, 3, seed=5), spin_glass_2d(3, 3, seed=5)
    assert [t.coeff for t in a.terms] == [t.coeff for t in b.terms]
    coeffs = np.array([t.coeff for t in a.terms])
    assert np.all(np.abs(coeffs - 1.0) < 6 * 0.1)
    assert exact_ground_state(spin_glass_2d(2, 2, seed=0)).energy == pytest.approx(-8.148073533855024, abs=1e-9)


def test_long_range_couplings():
    h2 = long_range_ising(2, 0.0)
    assert [t.coeff for t in h2.terms if len(t.support) == 2] == [1.0]
    h3 = long_range_ising(3)
    pairs = {t.support: t.coeff for t in h3.terms if len(t.support) == 2}
    assert pairs == {(0, 1): 1.0, (0, 2): 0.5, (1, 2): 1.0}
    assert exact_ground_state(long_range_ising(8)).energy == pytest.approx(-9.365084036870044, abs=1e-9)


def test_graph_hamiltonian_single_vertex_and_ring():
    h = graph_hamiltonian([], 1)
    assert exact_ground_state(h).energy == pytest.approx(-1)
    ring = graph_hamiltonian(RING4, 4)
    gs = exact_ground_state(ring)
    assert gs.energy == pytest.approx(-4)
    assert gs.first_excited - gs.energy > 1
    assert exact_expectation(expand(graph_rage_state(RING4, 4)), ring) == pytest.approx(-4)


def test_disturbed_graph_limits():
    plain = exact_ground_state(graph_hamiltonian(RING4, 4)).energy
    same = exact_ground_state(disturbed_graph_hamiltonian(RING4, [0.0] * 4, 4)).energy
    assert same == pytest.approx(plain)
    shifts = []
    for hz in (1e-3, 2e-3):
        e = exact_ground_state(disturbed_graph_hamiltonian(RING4, [hz] * 4, 4)).energy
        shifts.append(plain - e)
    # second order: doubling the field quadruples the shift
    assert shifts[1] / shifts[0] == pytest.approx(4, rel=1e-2)


def test_toric_code_and_kitaev():
    h = toric_code_hamiltonian(2, 3)
    assert h.n_sites == 12
    assert h.is_hermitian()
    k = kitaev_perturbed(2, 3, 1.0, 0.0)
    assert exact_ground_state(k).energy == pytest.approx(-12)
    # z-field in the graph frame decouples into two-level problems
    b = 0.4
    assert exact_ground_state(kitaev_perturbed(2, 3, 1.0, b)).energy == pytest.approx(-12 * np.hypot(1, b))


def test_local_operator_and_qudits():
    m = np.diag([1.0, 2.0, 3.0])
    op = LocalOperator(2, (1,), m, 3)
    h = HamiltonianSum(2, [op], 3)
    assert exact_ground_state(h).energy == pytest.approx(1)
    r = random_local_hamiltonian(3, 4, 3, seed=2)
    assert r.local_dim == 3 and r.is_hermitian()


def test_coupling_weights_symmetric():
    w = spin_glass_2d(2, 2, seed=1).coupling_weights()
    assert np.allclose(w, w.T)
    assert w[0, 3] == 0 and w[0, 1] > 0
