"""Matrix product states with open or closed boundary conditions.

Every site tensor is stored with index order ``(left, right, physical)``.
An open chain is the special case where the outer bonds have dimension 1;
a closed chain traces over the bond joining the last site to the first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonians import HamiltonianSum, ProductOperator
from .tensor_core import (
    DegenerateMetricError,
    as_tensor,
    make_rng,
    qr_reduce,
    random_complex,
    solve_generalized_eig_min,
    truncated_svd,
)

DENSITY_SUPPORT_CAP = 4


@dataclass(frozen=True)
class MPSState:
    tensors: tuple
    boundary: str = "open"

    def __post_init__(self):
        if self.boundary not in ("open", "closed"):
            raise ValueError("boundary must be 'open' or 'closed'")
        ts = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise ValueError("an MPS needs at least one site")
        q = ts[0].shape[2]
        for k, t in enumerate(ts):
            if t.ndim != 3:
                raise ValueError(f"site {k}: expected (left, right, q) tensor, got {t.shape}")
            if t.shape[2] != q:
                raise ValueError("all sites must share the local dimension")
            nxt = ts[(k + 1) % len(ts)]
            if k + 1 < len(ts) and t.shape[1] != nxt.shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        if ts[-1].shape[1] != ts[0].shape[0]:
            raise ValueError("outer bond dimensions disagree")
        if self.boundary == "open" and ts[0].shape[0] != 1:
            raise ValueError("open boundary requires outer bond dimension 1")
        if q < 2:
            raise ValueError("local dimension must be >= 2")

    @classmethod
    def from_tensors(cls, tensors: Sequence, boundary: str = "open") -> "MPSState":
        """Accept the two-index ``(D, q)`` boundary form for open chains."""
        ts = [np.asarray(t, dtype=complex) for t in tensors]
        if boundary == "open" and len(ts) > 1:
            if ts[0].ndim == 2:
                ts[0] = ts[0][None, :, :]
            if ts[-1].ndim == 2:
                ts[-1] = ts[-1][:, None, :]
        return cls(tuple(ts), boundary)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def local_dim(self) -> int:
        return self.tensors[0].shape[2]

    @property
    def bond_dims(self) -> list[int]:
        """Right bond dimension of each site (the last entry is the wrap bond)."""
        return [t.shape[1] for t in self.tensors]

    @property
    def max_bond(self) -> int:
        return max(max(t.shape[:2]) for t in self.tensors)

    def with_tensor(self, k: int, a) -> "MPSState":
        ts = list(self.tensors)
        ts[k] = a
        return MPSState(tuple(ts), self.boundary)

    def boundary_form(self) -> list[np.ndarray]:
        """Tensors with open-chain end sites reduced to ``(D, q)``."""
        ts = list(self.tensors)
        if self.boundary == "open" and len(ts) > 1:
            ts[0] = ts[0][0]
            ts[-1] = ts[-1][:, 0, :]
        return ts

    def scaled(self, c) -> "MPSState":
        return self.with_tensor(0, self.tensors[0] * c)


def random_mps(n: int, d: int, q: int = 2, boundary: str = "open", seed=0, cap: bool = False) -> MPSState:
    """Random MPS with entries uniform on [-1, 1] + i[-1, 1], normalized.

    With ``cap=True`` open-chain bonds are limited by the Hilbert-space
    dimension on either side.
    """
    rng = make_rng(seed)
    dims = [d] * (n + 1)
    if boundary == "open":
        dims[0] = dims[n] = 1
        if cap:
            for k in range(1, n):
                dims[k] = min(d, q ** k, q ** (n - k))
    ts = [random_complex((dims[k], dims[k + 1], q), rng) for k in range(n)]
    m = MPSState(tuple(ts), boundary)
    return m.scaled(1.0 / np.sqrt(mps_norm_squared(m)))


def product_mps(vectors, boundary: str = "open", bond_dim: int = 1) -> MPSState:
    """MPS of a product state, optionally padded to a larger bond dimension."""
    ts = []
    n = len(vectors)
    for k, v in enumerate(vectors):
        v = np.asarray(v, dtype=complex)
        dl = 1 if (boundary == "open" and k == 0) else bond_dim
        dr = 1 if (boundary == "open" and k == n - 1) else bond_dim
        t = np.zeros((dl, dr, len(v)), dtype=complex)
        t[0, 0, :] = v
        ts.append(t)
    return MPSState(tuple(ts), boundary)


def mps_from_dense(psi, n: int, q: int = 2, max_bond: int | None = None) -> MPSState:
    """Open MPS from a dense vector by successive SVDs (exact if uncapped)."""
    psi = np.asarray(psi, dtype=complex).reshape((q,) * n)
    ts = []
    rest = psi.reshape(1, -1)
    for k in range(n - 1):
        dl = rest.shape[0]
        mat = rest.reshape(dl * q, -1)
        u, s, v, _ = truncated_svd(mat, max_bond or mat.shape[0], rel_cutoff=1e-15)
        ts.append(u.reshape(dl, q, -1).transpose(0, 2, 1))
        rest = s[:, None] * v
    ts.append(rest.reshape(rest.shape[0], q, 1).transpose(0, 2, 1))
    return MPSState(tuple(ts), "open")


# ------------------------------------------------------- transfer matrices

def transfer_matrices(m: MPSState, site: int) -> np.ndarray:
    """All ``E_{k,l} = A_k (x) conj(A_l)`` of a site, shape ``(q, q, Dl^2, Dr^2)``."""
    a = m.tensors[site]
    dl, dr, q = a.shape
    e = np.einsum("ack,bdl->klabcd", a, a.conj())
    return e.reshape(q, q, dl * dl, dr * dr)


def summed_transfer(m: MPSState, site: int, op=None) -> np.ndarray:
    """``sum_{k,l} op[l, k] E_{k,l}``; the identity sum when ``op`` is None."""
    e = transfer_matrices(m, site)
    if op is None:
        return np.einsum("kkab->ab", e)
    return np.einsum("lk,klab->ab", op, e)


def mps_norm_squared(m: MPSState) -> float:
    """``<psi|psi>`` from the ordered product of summed transfer matrices."""
    p = summed_transfer(m, 0)
    for k in range(1, m.n_sites):
        p = p @ summed_transfer(m, k)
    return float(np.trace(p).real)


def mps_reduced_density(m: MPSState, support: Sequence[int], normalize: bool = True) -> np.ndarray:
    """Reduced density matrix on ``support`` (indices in the listed order)."""
    support = [int(s) for s in support]
    n, q = m.n_sites, m.local_dim
    if len(set(support)) != len(support) or any(not 0 <= s < n for s in support):
        raise ValueError(f"invalid support {support}")
    if len(support) > DENSITY_SUPPORT_CAP:
        raise ValueError(f"support larger than {DENSITY_SUPPORT_CAP} sites")
    ordered = sorted(support)
    w2 = m.tensors[0].shape[0] ** 2
    p = np.eye(w2, dtype=complex)[None]  # (open index pairs, w^2, D^2)
    for k in range(n):
        if k in ordered:
            e = transfer_matrices(m, k)
            p = np.einsum("xab,klbc->xklac", p, e).reshape(-1, w2, e.shape[3])
        else:
            p = p @ summed_transfer(m, k)
    vals = np.trace(p, axis1=1, axis2=2)
    s = len(ordered)
    rho = vals.reshape((q, q) * s).transpose(list(range(0, 2 * s, 2)) + list(range(1, 2 * s, 2)))
    perm = [ordered.index(x) for x in support]
    rho = rho.transpose(perm + [p_ + s for p_ in perm]).reshape(q ** s, q ** s)
    if normalize:
        rho = rho / np.trace(rho).real
    return rho


def _term_matrix(term, q):
    if hasattr(term, "letters"):
        return term.matrix()
    return np.asarray(term.matrix, dtype=complex)


def mps_expectation(m: MPSState, h: HamiltonianSum, method: str = "auto") -> float:
    """Normalized energy ``<psi|H|psi> / <psi|psi>``.

    ``method='density'`` sums ``tr(term rho_S)`` over reduced density
    matrices (support at most four sites); ``'products'`` contracts each
    product term through the chain and has no support limit. ``'auto'``
    picks the first when it applies.
    """
    if method == "auto":
        method = "density" if h.max_support() <= DENSITY_SUPPORT_CAP else "products"
    if method == "products":
        return float(mps_product_values(m, h.product_terms()).sum().real / mps_norm_squared(m))
    if method != "density":
        raise ValueError(f"unknown method {method!r}")
    total = 0.0
    for term in h.terms:
        sup = term.support
        if not sup:
            total += complex(term.coeff).real if hasattr(term, "letters") else float(np.trace(term.matrix).real)
            continue
        if len(sup) > DENSITY_SUPPORT_CAP:
            raise ValueError(f"term support {len(sup)} exceeds the density cap")
        rho = mps_reduced_density(m, sup)
        total += np.trace(_term_matrix(term, m.local_dim) @ rho)
    val = complex(total)
    if abs(val.imag) > 1e-8:
        raise ValueError("non-Hermitian expectation value")
    return float(val.real)


# ------------------------------------------------------------ environments

def _left_step(env, ket, bra, op):
    t = np.tensordot(env, ket, axes=([2], [0]))  # (wk, wb, l', r, s)
    if op is not None:
        t = np.tensordot(t, op, axes=([4], [1]))
    return np.tensordot(t, bra.conj(), axes=([2, 4], [0, 2]))  # (wk, wb, r, r')


def _right_step(env, ket, bra, op):
    t = np.tensordot(ket, env, axes=([1], [0]))  # (l, s, r', wk, wb)
    if op is not None:
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [1])), 0, 1)
    out = np.tensordot(bra.conj(), t, axes=([1, 2], [2, 1]))  # (l', l, wk, wb)
    return out.transpose(1, 0, 2, 3)


def _edge_env(wk, wb):
    return np.einsum("ac,bd->abcd", np.eye(wk), np.eye(wb)).astype(complex)


class MPSEnvironments:
    """Lazily computed, invalidation-aware left/right environments.

    ``left(i, k)`` contracts sites ``< k`` and ``right(i, k)`` sites ``>= k``
    for product operator ``i``. Both lists of tensors may be mutated in
    place by the caller, who must then call :meth:`invalidate`.
    """

    def __init__(self, ket: list, bra: list, ops: Sequence[ProductOperator]):
        self.ket = ket
        self.bra = bra
        self.ops = list(ops)
        self.n = len(ket)
        self._left = [dict() for _ in self.ops]
        self._right = [dict() for _ in self.ops]

    def _wrap(self):
        return self.ket[0].shape[0], self.bra[0].shape[0]

    def left(self, i, k):
        cache = self._left[i]
        if k in cache:
            return cache[k]
        start = max((j for j in cache if j < k), default=None)
        if start is None:
            env = _edge_env(*self._wrap())
            start = 0
            cache[0] = env
        env = cache[start]
        f = self.ops[i].factors
        for j in range(start, k):
            env = _left_step(env, self.ket[j], self.bra[j], f.get(j))
            cache[j + 1] = env
        return env

    def right(self, i, k):
        cache = self._right[i]
        if k in cache:
            return cache[k]
        start = min((j for j in cache if j > k), default=None)
        if start is None:
            env = _edge_env(self.ket[-1].shape[1], self.bra[-1].shape[1])
            start = self.n
            cache[self.n] = env
        env = cache[start]
        f = self.ops[i].factors
        for j in range(start - 1, k - 1, -1):
            env = _right_step(env, self.ket[j], self.bra[j], f.get(j))
            cache[j] = env
        return env

    def invalidate(self, site):
        for c in self._left:
            for k in [k for k in c if k > site]:
                del c[k]
        for c in self._right:
            for k in [k for k in c if k <= site]:
                del c[k]

    def value(self, i) -> complex:
        env = self.left(i, self.n)
        return complex(np.einsum("abab->", env)) * self.ops[i].coeff

    def block(self, i, site):
        """Environment ``M[l, l', r, r']`` around ``site`` for operator ``i``."""
        return np.tensordot(self.left(i, site), self.right(i, site + 1), axes=([0, 1], [2, 3]))


def _expand_block(mblock, op, q):
    """``h[(l', r', s'), (l, r, s)] = M[l, l', r, r'] op[s', s]``."""
    if op is None:
        op = np.eye(q)
    dl, _, dr, _ = mblock.shape
    h = np.einsum("abcd,ts->bdtacs", mblock, op)
    return h.reshape(dl * dr * q, dl * dr * q)


def effective_from_products(env: MPSEnvironments, site: int, op_indices=None) -> np.ndarray:
    """Quadratic form over the site tensor summed over product operators.

    Blocks sharing the same on-site factor are summed before expansion.
    """
    q = env.ket[site].shape[2]
    groups: dict = {}
    idx = range(len(env.ops)) if op_indices is None else op_indices
    for i in idx:
        op = env.ops[i]
        f = op.factors.get(site)
        key = None if f is None else f.tobytes()
        blk = op.coeff * env.block(i, site)
        if key in groups:
            groups[key][1] += blk
        else:
            groups[key] = [f, blk]
    total = None
    for f, blk in groups.values():
        h = _expand_block(blk, f, q)
        total = h if total is None else total + h
    return total


def overlap_vector(env: MPSEnvironments, site: int) -> np.ndarray:
    """Gradient of ``sum_i <bra|op_i|ket>`` with respect to ``conj(bra[site])``."""
    ket = env.ket[site]
    total = 0
    for i, op in enumerate(env.ops):
        blk = env.block(i, site)
        f = op.factors.get(site)
        t = ket if f is None else np.tensordot(ket, f, axes=([2], [1]))
        total = total + op.coeff * np.einsum("abcd,acs->bds", blk, t)
    return np.asarray(total).reshape(-1)


def mps_product_values(m: MPSState, ops: Sequence[ProductOperator], bra: MPSState | None = None) -> np.ndarray:
    """Unnormalized ``<bra|op|ket>`` for each product operator."""
    b = m if bra is None else bra
    env = MPSEnvironments(list(m.tensors), list(b.tensors), ops)
    return np.array([env.value(i) for i in range(len(ops))])


def mps_effective_pair(m: MPSState, site: int, h: HamiltonianSum | Sequence[ProductOperator]):
    """``(h_tilde, metric_tilde)`` over the flattened ``(l, r, s)`` site tensor."""
    ops = h.product_terms() if isinstance(h, HamiltonianSum) else list(h)
    if not 0 <= site < m.n_sites:
        raise IndexError("site out of range")
    ops = ops + [ProductOperator(1.0, {})]
    env = MPSEnvironments(list(m.tensors), list(m.tensors), ops)
    h_t = effective_from_products(env, site, range(len(ops) - 1))
    metric = effective_from_products(env, site, [len(ops) - 1])
    if h_t is None:
        h_t = np.zeros_like(metric)
    return h_t, metric


# ----------------------------------------------------------- canonical form

def _move_right(ts: list, k: int):
    """Left-orthonormalize site ``k`` and push the remainder into ``k + 1``."""
    a = ts[k]
    dl, dr, q = a.shape
    mat = a.transpose(0, 2, 1).reshape(dl * q, dr)
    qm, r = qr_reduce(mat)
    kdim = qm.shape[1]
    ts[k] = qm.reshape(dl, q, kdim).transpose(0, 2, 1)
    ts[k + 1] = np.tensordot(r, ts[k + 1], axes=([1], [0]))


def _move_left(ts: list, k: int):
    """Right-orthonormalize site ``k`` and push the remainder into ``k - 1``."""
    a = ts[k]
    dl, dr, q = a.shape
    mat = a.reshape(dl, dr * q).T
    qm, r = qr_reduce(mat)
    kdim = qm.shape[1]
    ts[k] = qm.T.reshape(kdim, dr, q)
    ts[k - 1] = np.tensordot(ts[k - 1], r, axes=([1], [1])).transpose(0, 2, 1)


def _canonical_tensors(ts: list, center: int) -> list:
    ts = list(ts)
    for k in range(center):
        _move_right(ts, k)
    for k in range(len(ts) - 1, center, -1):
        _move_left(ts, k)
    return ts


def mps_canonicalize_open(m: MPSState, center: int) -> MPSState:
    """Mixed canonical form around ``center`` via QR decompositions.

    Sites left of the center become left isometries and sites to the right
    right isometries, so the metric at the center is the identity. Closed
    chains must first be opened with :func:`mps_open_from_closed`.
    """
    if m.boundary != "open":
        raise ValueError("closed MPS: cut it open with mps_open_from_closed first")
    if not 0 <= center < m.n_sites:
        raise IndexError("center out of range")
    return MPSState(tuple(_canonical_tensors(list(m.tensors), center)), "open")


def mps_open_from_closed(m: MPSState) -> MPSState:
    """Open chain for the same state, obtained by cutting the wrap bond.

    The wrap index is carried along the chain, multiplying each interior
    bond by the wrap dimension.
    """
    if m.boundary == "open":
        return m
    w = m.tensors[0].shape[0]
    n = m.n_sites
    if n == 1:
        return MPSState((np.einsum("aas->s", m.tensors[0])[None, None, :],), "open")
    eye = np.eye(w)
    ts = []
    for k, a in enumerate(m.tensors):
        if k == 0:
            t = a.transpose(1, 0, 2).reshape(1, -1, a.shape[2])  # (1, (r, w), s)
        elif k == n - 1:
            t = a.transpose(0, 1, 2).reshape(-1, 1, a.shape[2])  # ((l, w), 1, s)
        else:
            t = np.einsum("lrs,wv->lwrvs", a, eye).reshape(a.shape[0] * w, a.shape[1] * w, a.shape[2])
        ts.append(t)
    return MPSState(tuple(ts), "open")


def is_left_isometry(a, tol=1e-10) -> bool:
    g = np.einsum("lrs,lts->rt", a, a.conj())
    return np.allclose(g, np.eye(g.shape[0]), atol=tol)


def is_right_isometry(a, tol=1e-10) -> bool:
    g = np.einsum("lrs,mrs->lm", a, a.conj())
    return np.allclose(g, np.eye(g.shape[0]), atol=tol)


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepResult:
    """Outcome of a variational sweep run.

    ``energies[0]`` is the starting energy and each later entry the energy
    after a full sweep; ``local_energies`` records every single-site
    update. ``skipped`` lists sites whose metric was degenerate.
    """

    state: object
    energies: list
    local_energies: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    converged: bool = False

    def __iter__(self):
        return iter((self.state, self.energies))


def _solve_site(env: MPSEnvironments, site: int, n_h: int, cutoff: float, current=None):
    h_t = effective_from_products(env, site, range(n_h))
    metric = effective_from_products(env, site, [n_h])
    return solve_generalized_eig_min(h_t, metric, cutoff, current)


def sweep_product_operators(ts: list, ops: Sequence[ProductOperator], max_sweeps: int, rel_tol: float,
                            cutoff: float = 1e-12, result: SweepResult | None = None):
    """Single-site sweeps minimizing ``sum(ops)`` over the tensors ``ts``.

    ``ts`` is modified in place and kept in mixed canonical form with the
    center moving along the chain.
    """
    n = len(ts)
    ops = list(ops) + [ProductOperator(1.0, {})]
    n_h = len(ops) - 1
    res = result or SweepResult(None, [])
    ts[:] = _canonical_tensors(ts, 0)
    env = MPSEnvironments(ts, ts, ops)
    norm = env.value(n_h).real
    e0 = sum(env.value(i) for i in range(n_h)).real / norm
    res.energies.append(float(e0))
    current = float(e0)

    def update(site):
        nonlocal current
        try:
            sol = _solve_site(env, site, n_h, cutoff, ts[site])
        except DegenerateMetricError:
            warnings.warn(f"degenerate metric at site {site}; update skipped")
            res.skipped.append(site)
            return
        ts[site] = sol.eigenvector.reshape(ts[site].shape)
        env.invalidate(site)
        current = sol.eigenvalue
        res.local_energies.append(current)

    for _ in range(max_sweeps):
        prev = current
        if n == 1:
            update(0)
        else:
            for k in range(n - 1):
                update(k)
                _move_right(ts, k)
                env.invalidate(k)
                env.invalidate(k + 1)
            for k in range(n - 1, 0, -1):
                update(k)
                _move_left(ts, k)
                env.invalidate(k)
                env.invalidate(k - 1)
        res.energies.append(current)
        if abs(prev - current) <= rel_tol * max(abs(current), 1e-12):
            res.converged = True
            break
    return res


def mps_sweep_minimize(m: MPSState, h: HamiltonianSum, max_sweeps: int = 20, rel_tol: float = 1e-10,
                       cutoff: float = 1e-12) -> SweepResult:
    """Variational ground-state search by single-site generalized eigenproblems."""
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    ts = list(m.tensors)
    res = sweep_product_operators(ts, h.product_terms(), max_sweeps, rel_tol, cutoff)
    res.state = MPSState(tuple(ts), m.boundary)
    return res


# --------------------------------------------------------------- utilities

def mps_overlap(a: MPSState, b: MPSState) -> complex:
    """``<a|b>``."""
    return complex(mps_product_values(b, [ProductOperator(1.0, {})], bra=a)[0])


def mps_fidelity(a: MPSState, b: MPSState) -> float:
    return abs(mps_overlap(a, b)) ** 2 / (mps_norm_squared(a) * mps_norm_squared(b))


def mps_truncate(m: MPSState, max_bond: int) -> tuple[MPSState, float]:
    """SVD truncation of an open MPS; returns the state and the discarded weight.

    The discarded weight is relative to the squared norm of the input.
    """
    if m.boundary != "open":
        raise ValueError("truncation requires an open chain")
    ts = _canonical_tensors(list(m.tensors), m.n_sites - 1)
    total = 0.0
    norm2 = float(np.vdot(ts[-1], ts[-1]).real)
    for k in range(m.n_sites - 1, 0, -1):
        a = ts[k]
        dl, dr, q = a.shape
        u, s, v, disc = truncated_svd(a.reshape(dl, dr * q), max_bond)
        total += disc
        ts[k] = v.reshape(-1, dr, q)
        ts[k - 1] = np.tensordot(ts[k - 1], u * s[None, :], axes=([1], [0])).transpose(0, 2, 1)
    return MPSState(tuple(ts), "open"), total / max(norm2, 1e-300)


def apply_single_site(m: MPSState, site: int, u) -> MPSState:
    """Apply a one-site operator exactly by absorbing it into the tensor."""
    a = np.tensordot(m.tensors[site], np.asarray(u, dtype=complex), axes=([2], [1]))
    return m.with_tensor(site, a)


def apply_product_sum(m: MPSState, ops: Sequence[ProductOperator]) -> MPSState:
    """Exact ``sum_i op_i |m>`` as an open MPS whose bonds grow by ``len(ops)``."""
    if m.boundary != "open":
        raise ValueError("requires an open chain")
    k = len(ops)
    n = m.n_sites
    ts = []
    for site in range(n):
        a = m.tensors[site]
        dl, dr, q = a.shape
        blocks = []
        for op in ops:
            f = op.factors.get(site)
            t = a if f is None else np.tensordot(a, f, axes=([2], [1]))
            if site == 0:
                t = t * op.coeff
            blocks.append(t)
        if n == 1:
            ts.append(sum(blocks))
        elif site == 0:
            ts.append(np.concatenate(blocks, axis=1))
        elif site == n - 1:
            ts.append(np.concatenate(blocks, axis=0))
        else:
            t = np.zeros((dl * k, dr * k, q), dtype=complex)
            for i, b in enumerate(blocks):
                t[i * dl:(i + 1) * dl, i * dr:(i + 1) * dr] = b
            ts.append(t)
    return MPSState(tuple(ts), "open")


def compress_variational(target_ops: Sequence[ProductOperator], target: MPSState, guess: MPSState,
                         sweeps: int = 2, cutoff: float = 1e-12) -> tuple[MPSState, float]:
    """Maximize ``|<x| sum_i op_i |target>|^2 / <x|x>`` over open MPS ``x``.

    Starts from ``guess`` (whose bond dimensions are kept) and performs
    single-site sweeps; each site solves the rank-one generalized
    eigenproblem in closed form. Returns the state and the attained
    normalized fidelity.
    """
    ts = _canonical_tensors(list(guess.tensors), 0)
    n = len(ts)
    ops = list(target_ops)
    env = MPSEnvironments(list(target.tensors), ts, ops)
    tnorm = mps_norm_squared(target)
    fid = 0.0

    def update(site):
        nonlocal fid
        b = overlap_vector(env, site)
        # the site tensor is the canonical center, so the metric is identity
        nb = np.linalg.norm(b)
        if nb == 0:
            return
        ts[site] = (b / nb).reshape(ts[site].shape)
        env.invalidate(site)
        fid = float(nb ** 2 / tnorm)

    for _ in range(sweeps):
        for k in range(n - 1):
            update(k)
            _move_right(ts, k)
            env.invalidate(k)
            env.invalidate(k + 1)
        for k in range(n - 1, 0, -1):
            update(k)
            _move_left(ts, k)
            env.invalidate(k)
            env.invalidate(k - 1)
        if n == 1:
            update(0)
    return MPSState(tuple(ts), "open"), fid
