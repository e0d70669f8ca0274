"""Dense complex tensor kernels shared by every network module.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
helpers here add input validation and a few conventions (QR with a
nonnegative diagonal, phase-fixed eigenvectors) on top of numpy/scipy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

DTYPE = np.complex128


class DegenerateMetricError(ValueError):
    """Raised when a metric matrix has no eigenvalue above the cutoff."""


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a complex128 array with every dimension >= 1."""
    arr = np.asarray(x, dtype=DTYPE)
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"tensor dimensions must be positive, got {arr.shape}")
    return arr


def contract(a, b, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Contract two tensors over the listed index pairs.

    Parameters
    ----------
    a, b : array_like
        Input tensors.
    pairs : sequence of (int, int)
        Each pair ``(i, j)`` sums index ``i`` of ``a`` against index ``j``
        of ``b``.

    Returns
    -------
    ndarray
        Unpaired indices of ``a`` in order, followed by the unpaired
        indices of ``b``.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    ia = [int(p[0]) for p in pairs]
    ib = [int(p[1]) for p in pairs]
    if len(set(ia)) != len(ia) or len(set(ib)) != len(ib):
        raise ValueError("an index appears in more than one pair")
    for i, j in zip(ia, ib):
        if not (0 <= i < a.ndim and 0 <= j < b.ndim):
            raise IndexError(f"pair ({i}, {j}) out of range")
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"dimension mismatch on pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(ia, ib))


def qr_reduce(m) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a real nonnegative diagonal on ``r``.

    For an ``rows x cols`` input, ``q`` is ``rows x k`` and ``r`` is
    ``k x cols`` with ``k = min(rows, cols)``.
    """
    m = as_tensor(m)
    if m.ndim != 2:
        raise ValueError("qr_reduce expects a matrix")
    q, r = np.linalg.qr(m, mode="reduced")
    d = np.diagonal(r).copy()
    mag = np.abs(d)
    phase = np.ones_like(d)
    nz = mag > 0
    phase[nz] = d[nz] / mag[nz]
    # absorb the diagonal phases into q so that r has a real diagonal
    q = q * phase[None, :]
    r = np.conj(phase)[:, None] * r
    k = r.shape[0]
    r[np.arange(k), np.arange(k)] = np.real(r[np.arange(k), np.arange(k)])
    return q, r


def truncated_svd(m, max_rank: int, rel_cutoff: float = 0.0):
    """Best rank-limited factorization ``m ~ u @ diag(s) @ v``.

    Singular values below ``rel_cutoff * s[0]`` are also dropped. Returns
    ``(u, s, v, discarded_weight)`` where the discarded weight is the sum
    of the squared singular values that were dropped.
    """
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    m = as_tensor(m)
    try:
        u, s, v = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        u, s, v = sla.svd(m, full_matrices=False, lapack_driver="gesvd")
    keep = min(max_rank, len(s))
    if rel_cutoff > 0 and len(s) and s[0] > 0:
        keep = max(1, min(keep, int(np.sum(s > rel_cutoff * s[0]))))
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], v[:keep, :], discarded


def fix_phase(x: np.ndarray) -> np.ndarray:
    """Rotate ``x`` so that its largest-magnitude entry is real and >= 0."""
    flat = x.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    if abs(flat[k]) == 0:
        return x
    return x * (abs(flat[k]) / flat[k])


@dataclass(frozen=True)
class GeneralizedEigSolution:
    """Minimal eigenpair of ``h x = lambda metric x`` plus conditioning info."""

    eigenvalue: float
    eigenvector: np.ndarray
    effective_rank: int
    smallest_retained: float
    improved: bool = True


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=DTYPE)
    return 0.5 * (m + m.conj().T)


def rayleigh_quotient(h, metric, x) -> float:
    x = np.asarray(x, dtype=DTYPE).reshape(-1)
    return float((np.vdot(x, h @ x) / np.vdot(x, metric @ x)).real)


def solve_generalized_eig_min(h, metric, cutoff: float = 1e-12, current=None) -> GeneralizedEigSolution:
    """Minimize the Rayleigh quotient ``x^H h x / x^H metric x``.

    The metric is diagonalized and directions with eigenvalue below
    ``cutoff`` times the largest one are projected out before solving the
    reduced ordinary problem.

    With an ill-conditioned metric the reduced eigenvalue carries round-off
    of order cond(metric) * eps. When ``current`` is given, both vectors are
    scored with the full quotient and the better one is returned, so an
    update never raises the energy; ``eigenvalue`` is then the full quotient.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    h = hermitian_part(h)
    metric = hermitian_part(metric)
    if h.shape != metric.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("h and metric must be square matrices of equal size")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(metric))):
        raise ValueError("non-finite entries in generalized eigenproblem")
    w, u = np.linalg.eigh(metric)
    top = w[-1] if w.size else 0.0
    if not top > 1e-300:
        raise DegenerateMetricError("metric is numerically zero")
    keep = w > cutoff * top
    w_k = w[keep]
    basis = u[:, keep] / np.sqrt(w_k)[None, :]
    reduced = hermitian_part(basis.conj().T @ h @ basis)
    vals, vecs = np.linalg.eigh(reduced)
    x = fix_phase(basis @ vecs[:, 0])
    value = float(vals[0])
    improved = True
    if current is not None:
        old = np.asarray(current, dtype=DTYPE).reshape(-1)
        value = rayleigh_quotient(h, metric, x)
        if np.vdot(old, metric @ old).real > 0:
            old_value = rayleigh_quotient(h, metric, old)
            if old_value < value:
                x, value, improved = old.copy(), old_value, False
    return GeneralizedEigSolution(
        eigenvalue=value,
        eigenvector=x,
        effective_rank=int(keep.sum()),
        smallest_retained=float(w_k[0]),
        improved=improved,
    )


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    """Entries with real and imaginary parts uniform on [-1, 1]."""
    return rng.uniform(-1.0, 1.0, size=shape) + 1j * rng.uniform(-1.0, 1.0, size=shape)


def make_rng(seed) -> np.random.Generator:
    """Library-wide generator: numpy PCG64 seeded from an int or passed through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
