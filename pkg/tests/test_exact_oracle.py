import numpy as np
import pytest
from hypothesis import given, strategies as st

from ragetn.exact_oracle import (
    StateVector,
    apply_hamiltonian,
    exact_expectation,
    exact_ground_state,
    expand,
    fidelity,
    hamiltonian_matrix,
    product_state,
    random_state,
    reduced_density,
    schmidt_spectrum,
)
from ragetn.hamiltonians import PauliString, ising_2d, pauli_sum, random_pauli_sum
from ragetn.mps import product_mps

ZERO, ONE = np.array([1, 0]), np.array([0, 1])
PLUS = np.array([1, 1]) / np.sqrt(2)


def z_field(n):
    return pauli_sum(n, [({i: "Z"}, 1.0) for i in range(n)])


def x_field(n):
    return pauli_sum(n, [({i: "X"}, 1.0) for i in range(n)])


def test_state_vector_validation():
    with pytest.raises(ValueError):
        StateVector(np.zeros(4), 2)
    with pytest.raises(ValueError):
        StateVector(np.ones(3), 2)


def test_expand_product_mps():
    m = product_mps([ZERO] * 3)
    v = expand(m).amplitudes
    assert v[0] == 1 and np.allclose(v[1:], 0)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_field_expectations(n):
    assert exact_expectation(product_state([ZERO] * n), z_field(n)) == pytest.approx(n)
    assert exact_expectation(product_state([PLUS] * n), x_field(n)) == pytest.approx(n)


def test_non_hermitian_expectation_raises():
    h = pauli_sum(1, [({0: "X"}, 1j)])
    with pytest.raises(ValueError):
        exact_expectation(product_state([PLUS]), h)


def test_ground_state_single_qubit():
    gs = exact_ground_state(pauli_sum(1, [({0: "Z"}, 1.0)]))
    assert gs.energy == pytest.approx(-1)
    assert fidelity(gs.state, product_state([ONE])) == pytest.approx(1)


def test_ground_state_zz_degenerate():
    gs = exact_ground_state(pauli_sum(2, [({0: "Z", 1: "Z"}, 1.0)]))
    assert gs.energy == pytest.approx(-1)
    assert gs.degenerate


def test_tfi_chain_against_free_fermions():
    # open chain J sum ZZ + B sum X maps to free fermions; E0 = -sum of
    # singular values of the bidiagonal coupling matrix
    n = 8
    coupling = np.eye(n) + np.diag(np.ones(n - 1), 1)
    ref = -np.linalg.svd(coupling, compute_uv=False).sum()
    gs = exact_ground_state(ising_2d(n, 1, 1.0, 1.0))
    assert gs.energy == pytest.approx(ref, abs=1e-10)
    assert gs.first_excited > gs.energy


def test_fidelity_values():
    a = product_state([ZERO, ONE])
    assert fidelity(a, a) == pytest.approx(1)
    assert fidelity(a, product_state([ONE, ONE])) == pytest.approx(0)
    assert fidelity(product_state([PLUS]), product_state([ZERO])) == pytest.approx(0.5)


def test_schmidt_product_and_bell():
    assert np.allclose(schmidt_spectrum(product_state([PLUS, ZERO, ONE]), [0])[0], 1)
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), 2)
    assert np.allclose(schmidt_spectrum(bell, [0]), [0.5, 0.5])
    with pytest.raises(ValueError):
        schmidt_spectrum(bell, [0, 1])


def test_reduced_density_product():
    rho = reduced_density(product_state([ZERO, ONE]), [1])
    assert np.allclose(rho, np.diag([0, 1]))


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_reduced_density_properties(n, seed):
    psi = random_state(n, seed=seed)
    k = min(2, n)
    rho = reduced_density(psi, list(range(k)))
    assert np.trace(rho).real == pytest.approx(1)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_matrix_and_matvec_agree(n, seed):
    h = random_pauli_sum(n, 6, 2, seed)
    psi = random_state(n, seed=seed)
    mat = hamiltonian_matrix(h)
    assert np.allclose(mat @ psi.amplitudes, apply_hamiltonian(psi, h))
    assert np.allclose(hamiltonian_matrix(h, sparse=True).toarray(), mat)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_ground_energy_is_variational_minimum(n, seed):
    h = random_pauli_sum(n, 5, 2, seed)
    gs = exact_ground_state(h)
    psi = random_state(n, seed=seed + 1)
    assert exact_expectation(psi, h) >= gs.energy - 1e-10
    assert exact_expectation(gs.state, h) == pytest.approx(gs.energy, abs=1e-9)


def test_pauli_string_expectation_sign():
    s = PauliString("XY", 1.0)
    state = StateVector(np.array([1, 1j, 1j, -1]) / 2, 2)  # |+i>|+i>
    assert exact_expectation(state, PauliString("YY", 1.0)) == pytest.approx(1)
    assert exact_expectation(state, s) == pytest.approx(0, abs=1e-12)
