"""Dense state-vector reference engine.

Every approximate routine in the package is tested against the functions
here. Amplitude index convention: site 0 is the most significant digit,
i.e. the amplitude array reshaped to ``(q,) * n`` has site ``k`` on axis
``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .hamiltonians import HamiltonianSum, ProductOperator

MAX_DIM = 2 ** 14


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    num_sites: int
    local_dim: int = 2

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amp)
        if amp.size != self.local_dim ** self.num_sites:
            raise ValueError("amplitude count does not match local_dim ** num_sites")
        nrm = np.linalg.norm(amp)
        if not np.isfinite(nrm) or nrm == 0:
            raise ValueError("state norm must be finite and positive")

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.local_dim,) * self.num_sites)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / np.sqrt(self.norm_squared()), self.num_sites, self.local_dim)


def _check_size(n, q):
    if q ** n > MAX_DIM:
        raise ValueError(f"system too large for the dense oracle: {q}^{n}")


def product_state(vectors) -> StateVector:
    """Tensor product of single-site vectors."""
    out = np.array([1.0 + 0j])
    for v in vectors:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return StateVector(out, len(vectors), len(vectors[0]))


# ------------------------------------------------------------------ expand

def _expand_mps(m) -> np.ndarray:
    # running tensor: (wrap, phys..., right)
    first = m.tensors[0]
    acc = first.transpose(0, 2, 1)  # (l, s, r)
    for t in m.tensors[1:]:
        acc = np.tensordot(acc, t, axes=([acc.ndim - 1], [0]))  # (..., r', s)
        acc = np.moveaxis(acc, -1, -2)
    # acc: (wrap, s0, ..., s_{n-1}, wrap')
    return np.trace(acc, axis1=0, axis2=acc.ndim - 1)


def _expand_tts(t) -> np.ndarray:
    topo = t.topology
    root = 0

    def sub(v, parent):
        # returns tensor (parent leg if any, phys of subtree...) and site list
        a = t.tensors[v]
        nbrs = topo.neighbors[v]
        legs = list(nbrs) + [("site", s) for s in topo.sites[v]]
        sites_out = []
        # contract children one by one
        cur = a
        cur_legs = legs
        for c in nbrs:
            if c == parent:
                continue
            child, child_sites = sub(c, v)
            pos = cur_legs.index(c)
            cur = np.tensordot(cur, child, axes=([pos], [0]))
            cur_legs = cur_legs[:pos] + cur_legs[pos + 1:] + [("site", s) for s in child_sites]
        order = []
        if parent is not None:
            order.append(cur_legs.index(parent))
        phys = [(leg[1], i) for i, leg in enumerate(cur_legs) if isinstance(leg, tuple)]
        phys.sort()
        order += [i for _, i in phys]
        sites_out = [s for s, _ in phys]
        return cur.transpose(order), sites_out

    full, sites = sub(root, None)
    assert sites == list(range(topo.n_sites))
    return full


def _expand_peps(p) -> np.ndarray:
    lx, ly = p.lx, p.ly
    labels = {}

    def lab(key):
        return labels.setdefault(key, len(labels))

    operands = []
    for y in range(ly):
        for x in range(lx):
            a = p.tensor(x, y)  # (u, l, d, r, s)
            idx = [0 if y == 0 else slice(None), 0 if x == 0 else slice(None),
                   0 if y == ly - 1 else slice(None), 0 if x == lx - 1 else slice(None), slice(None)]
            legs = []
            if y > 0:
                legs.append(lab(("v", x, y - 1)))
            if x > 0:
                legs.append(lab(("h", x - 1, y)))
            if y < ly - 1:
                legs.append(lab(("v", x, y)))
            if x < lx - 1:
                legs.append(lab(("h", x, y)))
            legs.append(lab(("s", y * lx + x)))
            operands += [a[tuple(idx)], legs]
    out = [labels[("s", k)] for k in range(lx * ly)]
    return np.einsum(*operands, out, optimize="greedy")


def apply_phases_dense(psi: np.ndarray, phases) -> np.ndarray:
    """Multiply amplitudes by ``exp(i sum_{a<b} phi_ab[s_a, s_b])``."""
    n = psi.ndim
    q = psi.shape[0]
    total = np.zeros(psi.shape)
    for a in range(n):
        for b in range(a + 1, n):
            tab = phases.table[a, b]
            if not np.any(tab):
                continue
            shape = [1] * n
            shape[a] = q
            shape[b] = q
            total = total + tab.reshape(shape)
    return psi * np.exp(1j * total)


def apply_local(psi: np.ndarray, site: int, m: np.ndarray) -> np.ndarray:
    out = np.tensordot(m, psi, axes=([1], [site]))
    return np.moveaxis(out, 0, site)


def expand(state) -> StateVector:
    """Full contraction of a network state into a dense vector."""
    from .mps import MPSState
    from .peps import PEPSState
    from .rage import RageState
    from .tts import TTSState

    if isinstance(state, StateVector):
        return state
    if isinstance(state, RageState):
        base = expand(state.backbone)
        psi = apply_phases_dense(base.tensor(), state.phases)
        if state.rotations is not None:
            for k, v in enumerate(state.rotations.matrices()):
                psi = apply_local(psi, k, v)
        return StateVector(psi.reshape(-1), base.num_sites, base.local_dim)
    n, q = state.n_sites, state.local_dim
    _check_size(n, q)
    if isinstance(state, MPSState):
        psi = _expand_mps(state)
    elif isinstance(state, TTSState):
        psi = _expand_tts(state)
    elif isinstance(state, PEPSState):
        psi = _expand_peps(state)
    else:
        raise TypeError(f"cannot expand {type(state).__name__}")
    return StateVector(psi.reshape(-1), n, q)


# ------------------------------------------------------------- observables

def apply_product(psi: np.ndarray, op: ProductOperator) -> np.ndarray:
    out = psi
    for site, m in op.factors.items():
        out = apply_local(out, site, m)
    return op.coeff * out


def apply_hamiltonian(state: StateVector, h) -> np.ndarray:
    psi = state.tensor()
    out = np.zeros_like(psi)
    for op in _products(h):
        out = out + apply_product(psi, op)
    return out.reshape(-1)


def _products(op):
    if isinstance(op, ProductOperator):
        return [op]
    return op.product_terms()


def exact_expectation(state: StateVector, op, hermitian_tol: float = 1e-8) -> float:
    """Normalized ``<psi|H|psi>``; raises if the result is not real."""
    val = exact_expectation_complex(state, op)
    if abs(val.imag) > hermitian_tol:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian")
    return float(val.real)


def exact_expectation_complex(state: StateVector, op) -> complex:
    n_sites = getattr(op, "n_sites", state.num_sites)
    if n_sites != state.num_sites:
        raise ValueError("operator and state site counts differ")
    hpsi = apply_hamiltonian(state, op)
    return complex(np.vdot(state.amplitudes, hpsi) / state.norm_squared())


def hamiltonian_matrix(h: HamiltonianSum, sparse: bool = False):
    """Dense (or CSR) matrix of a Hamiltonian in the site-0-major basis."""
    n, q = h.n_sites, h.local_dim
    _check_size(n, q)
    dim = q ** n
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for op in h.product_terms():
        mat = sp.identity(1, dtype=complex, format="csr")
        for site in range(n):
            f = op.factors.get(site)
            f = sp.identity(q, dtype=complex, format="csr") if f is None else sp.csr_matrix(f)
            mat = sp.kron(mat, f, format="csr")
        total = total + op.coeff * mat
    return total if sparse else total.toarray()


@dataclass(frozen=True)
class GroundState:
    energy: float
    state: StateVector
    first_excited: float
    degenerate: bool
    spectral_range: float

    def __iter__(self):
        return iter((self.energy, self.state))


def exact_ground_state(h: HamiltonianSum) -> GroundState:
    """Lowest eigenpair and first excited energy by dense diagonalization."""
    mat = hamiltonian_matrix(h)
    if not np.allclose(mat, mat.conj().T, atol=1e-10):
        raise ValueError("Hamiltonian is not Hermitian")
    if np.max(np.abs(mat.imag), initial=0.0) == 0.0:
        mat = mat.real
    dim = mat.shape[0]
    if dim == 1:
        e = float(np.real(mat[0, 0]))
        return GroundState(e, StateVector(np.ones(1), h.n_sites, h.local_dim), e, False, 0.0)
    lo, vecs = sla.eigh(mat, subset_by_index=[0, 1])
    hi = sla.eigh(mat, eigvals_only=True, subset_by_index=[dim - 1, dim - 1])[0]
    span = float(hi - lo[0])
    gap = float(lo[1] - lo[0])
    degenerate = gap < 1e-10 * max(span, 1e-300)
    vec = vecs[:, 0].astype(complex)
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    return GroundState(float(lo[0]), StateVector(vec, h.n_sites, h.local_dim), float(lo[1]), bool(degenerate), span)


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)``."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError("dimension mismatch")
    na, nb = a.norm_squared(), b.norm_squared()
    if na == 0 or nb == 0:
        raise ValueError("zero-norm state")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 / (na * nb)
    return float(min(max(f, 0.0), 1.0))


def schmidt_spectrum(state: StateVector, left_sites) -> np.ndarray:
    """Squared Schmidt coefficients (descending) for the cut ``left | rest``."""
    left = sorted(set(int(s) for s in left_sites))
    n = state.num_sites
    if not left or len(left) >= n or left[0] < 0 or left[-1] >= n:
        raise ValueError("left_sites must be a nonempty proper subset of the sites")
    right = [s for s in range(n) if s not in left]
    q = state.local_dim
    m = state.tensor().transpose(left + right).reshape(q ** len(left), -1)
    s = np.linalg.svd(m, compute_uv=False) ** 2
    return s / s.sum()


def reduced_density(state: StateVector, sites) -> np.ndarray:
    """Reduced density matrix on ``sites`` (listed order), trace one."""
    sites = list(sites)
    n, q = state.num_sites, state.local_dim
    rest = [s for s in range(n) if s not in sites]
    m = state.tensor().transpose(sites + rest).reshape(q ** len(sites), -1)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def random_state(n: int, q: int = 2, seed=0) -> StateVector:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=q ** n) + 1j * rng.normal(size=q ** n)
    return StateVector(v / np.linalg.norm(v), n, q)
