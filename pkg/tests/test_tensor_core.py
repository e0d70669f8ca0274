import numpy as np
import pytest
from hypothesis import given, strategies as st

from ragetn.tensor_core import (
    DegenerateMetricError,
    as_tensor,
    contract,
    fix_phase,
    make_rng,
    qr_reduce,
    random_complex,
    solve_generalized_eig_min,
    truncated_svd,
)

dims = st.integers(1, 5)


def test_as_tensor_rejects_empty_dims():
    with pytest.raises(ValueError):
        as_tensor(np.zeros((2, 0)))
    assert as_tensor([1, 2]).dtype == np.complex128


def test_contract_matches_einsum():
    rng = make_rng(1)
    a = random_complex((2, 3, 4), rng)
    b = random_complex((4, 5, 3), rng)
    out = contract(a, b, [(1, 2), (2, 0)])
    assert np.allclose(out, np.einsum("abc,cdb->ad", a, b))


def test_contract_errors():
    a = np.ones((2, 3))
    with pytest.raises(ValueError):
        contract(a, np.ones((2, 3)), [(1, 0)])
    with pytest.raises(IndexError):
        contract(a, a, [(5, 0)])
    with pytest.raises(ValueError):
        contract(a, np.ones((3, 3)), [(1, 0), (1, 1)])


def test_qr_identity():
    q, r = qr_reduce(np.eye(3))
    assert np.allclose(q, np.eye(3)) and np.allclose(r, np.eye(3))


@given(dims, dims, st.integers(0, 10_000))
def test_qr_reconstructs_with_real_diagonal(rows, cols, seed):
    m = random_complex((rows, cols), make_rng(seed))
    q, r = qr_reduce(m)
    k = min(rows, cols)
    assert q.shape == (rows, k) and r.shape == (k, cols)
    assert np.allclose(q @ r, m)
    assert np.allclose(q.conj().T @ q, np.eye(k))
    d = np.diagonal(r)
    assert np.all(np.abs(d.imag) == 0) and np.all(d.real >= 0)


def test_svd_rank_one_exact():
    m = np.outer([1, 2, 3], [1, -1])
    u, s, v, disc = truncated_svd(m, 1)
    assert np.allclose(u @ np.diag(s) @ v, m)
    assert disc == pytest.approx(0.0, abs=1e-24)


@given(dims, dims, st.integers(1, 5), st.integers(0, 10_000))
def test_svd_discarded_weight(rows, cols, rank, seed):
    m = random_complex((rows, cols), make_rng(seed))
    u, s, v, disc = truncated_svd(m, rank)
    err = np.linalg.norm(m - u @ np.diag(s) @ v) ** 2
    assert err == pytest.approx(disc, abs=1e-9)
    assert len(s) <= rank


def test_svd_cutoff_and_bad_rank():
    u, s, v, _ = truncated_svd(np.diag([1.0, 1e-9]), 2, rel_cutoff=1e-6)
    assert len(s) == 1
    with pytest.raises(ValueError):
        truncated_svd(np.eye(2), 0)


def test_fix_phase():
    x = fix_phase(np.array([0.1, -2j]))
    assert x[1] == pytest.approx(2.0)


def test_generalized_eig_diag():
    sol = solve_generalized_eig_min(np.diag([2.0, 1.0]), np.eye(2))
    assert sol.eigenvalue == pytest.approx(1.0)
    assert np.allclose(sol.eigenvector, [0, 1])


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_generalized_eig_matches_scipy(n, seed):
    import scipy.linalg as sla

    rng = make_rng(seed)
    a = random_complex((n, n), rng)
    h = a + a.conj().T
    b = random_complex((n, n), rng)
    metric = b @ b.conj().T + n * np.eye(n)
    sol = solve_generalized_eig_min(h, metric)
    ref = sla.eigh(h, metric, eigvals_only=True)[0]
    assert sol.eigenvalue == pytest.approx(ref, abs=1e-9)
    x = sol.eigenvector
    assert np.allclose(h @ x, sol.eigenvalue * metric @ x, atol=1e-8)


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_generalized_eig_never_worse_than_current(n, seed):
    rng = make_rng(seed)
    a = random_complex((n, n), rng)
    h = a + a.conj().T
    b = random_complex((n, n - 1), rng)
    # nearly singular metric: one direction close to the cutoff
    metric = b @ b.conj().T + 1e-11 * np.eye(n)
    cur = random_complex((n,), rng)
    old = np.vdot(cur, h @ cur).real / np.vdot(cur, metric @ cur).real
    sol = solve_generalized_eig_min(h, metric, current=cur)
    x = sol.eigenvector
    full = np.vdot(x, h @ x).real / np.vdot(x, metric @ x).real
    assert full <= old


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_generalized_eig_reports_full_quotient(n, seed):
    import scipy.linalg as sla

    rng = make_rng(seed)
    a = random_complex((n, n), rng)
    h = a + a.conj().T
    b = random_complex((n, n), rng)
    metric = b @ b.conj().T + n * np.eye(n)
    sol = solve_generalized_eig_min(h, metric, current=random_complex((n,), rng))
    x = sol.eigenvector
    assert sol.eigenvalue == pytest.approx(sla.eigh(h, metric, eigvals_only=True)[0], abs=1e-9)
    assert sol.eigenvalue == pytest.approx(np.vdot(x, h @ x).real / np.vdot(x, metric @ x).real, rel=1e-10)


def test_generalized_eig_keeps_optimal_current():
    h = np.diag([2.0, 1.0])
    sol = solve_generalized_eig_min(h, np.eye(2), current=np.array([0.0, 1.0]))
    assert sol.eigenvalue == pytest.approx(1.0)


def test_generalized_eig_singular_metric_projected():
    h = np.diag([5.0, -3.0, 1.0])
    metric = np.diag([1.0, 0.0, 1.0])
    sol = solve_generalized_eig_min(h, metric)
    assert sol.eigenvalue == pytest.approx(1.0)
    assert sol.effective_rank == 2


def test_generalized_eig_errors():
    with pytest.raises(DegenerateMetricError):
        solve_generalized_eig_min(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        solve_generalized_eig_min(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        solve_generalized_eig_min(np.array([[np.nan]]), np.eye(1))


def test_rng_reproducible():
    a = random_complex((3,), make_rng(4))
    b = random_complex((3,), make_rng(4))
    assert np.array_equal(a, b)
    assert np.all(np.abs(a.real) <= 1) and np.all(np.abs(a.imag) <= 1)
    g = make_rng(1)
    assert make_rng(g) is g
