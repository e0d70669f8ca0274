"""RAGE states: a tensor-network backbone dressed by pairwise phases and local rotations.

The represented state is ``(prod_k V_k) W(phi) |backbone>``. Every
observable is reduced to backbone expectation values of product
operators: rotations are moved onto the operator, and conjugating a
matrix unit ``|s'><s|`` on sites ``A`` through the phase layer leaves a
scalar phase plus a diagonal operator on every other site.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonians import HamiltonianSum, PauliString, ProductOperator
from .mps import (MPSState, SweepResult, mps_effective_pair, mps_product_values, product_mps,
                  sweep_product_operators)
from .tensor_core import DegenerateMetricError, solve_generalized_eig_min
from .tts import TTSState, sweep_tree_product_operators, tts_effective_pair, tts_product_values
from .wgs import (ROTATION_BASIS, AdjacencyPhases, LocalRotations, Pauli, conjugate_pauli,
                  graph_state_phases)

FAMILIES = ("tensors", "rotations", "phases")


@dataclass(frozen=True)
class RageState:
    backbone: object
    phases: AdjacencyPhases
    rotations: LocalRotations | None = None

    def __post_init__(self):
        n = self.backbone.n_sites
        if self.phases.n_sites != n:
            raise ValueError("phase table and backbone have different site counts")
        if self.phases.local_dim != self.backbone.local_dim:
            raise ValueError("phase table and backbone have different local dimensions")
        if self.rotations is not None:
            if self.backbone.local_dim != 2:
                raise ValueError("local rotations are only defined for qubits")
            if self.rotations.n_sites != n:
                raise ValueError("rotations and backbone have different site counts")

    @property
    def n_sites(self) -> int:
        return self.backbone.n_sites

    @property
    def local_dim(self) -> int:
        return self.backbone.local_dim

    def with_backbone(self, b) -> "RageState":
        return RageState(b, self.phases, self.rotations)

    def with_phases(self, p: AdjacencyPhases) -> "RageState":
        return RageState(self.backbone, p, self.rotations)

    def with_rotations(self, r: LocalRotations | None) -> "RageState":
        return RageState(self.backbone, self.phases, r)

    def rotation_matrix(self, k: int):
        # x = (+-1, 0, 0, 0) is the identity up to a sign
        if self.rotations is None or self.rotations.is_identity(k):
            return None
        return self.rotations.matrix(k)


def rage_state(backbone, phases: AdjacencyPhases | None = None, rotations: LocalRotations | None = None,
               with_rotations: bool = True) -> RageState:
    """Wrap a backbone, defaulting to zero phases and identity rotations."""
    n, q = backbone.n_sites, backbone.local_dim
    if phases is None:
        phases = AdjacencyPhases.zeros(n, q)
    if rotations is None and with_rotations and q == 2:
        rotations = LocalRotations.identity(n)
    return RageState(backbone, phases, rotations)


def graph_rage_state(edges, n_sites: int, bond_dim: int = 1) -> RageState:
    """``|+>^N`` backbone (open MPS) with graph-state phases."""
    plus = np.ones(2) / np.sqrt(2)
    return rage_state(product_mps([plus] * n_sites, bond_dim=bond_dim), graph_state_phases(edges, n_sites))


# ------------------------------------------------------------------ dressing

def _rotate(op: ProductOperator, r: RageState) -> ProductOperator:
    if r.rotations is None:
        return op
    factors = {}
    for s, m in op.factors.items():
        v = r.rotation_matrix(s)
        factors[s] = m if v is None else v.conj().T @ m @ v
    return ProductOperator(op.coeff, factors)


def _site_options(m: np.ndarray, tol: float):
    """Split a factor into its diagonal part and off-diagonal matrix units."""
    scale = np.abs(m).max()
    opts = []
    d = np.diag(m)
    if np.any(np.abs(d) > tol * scale):
        opts.append(("diag", d))
    q = m.shape[0]
    for out in range(q):
        for inp in range(q):
            if out != inp and abs(m[out, inp]) > tol * scale:
                opts.append((out, inp, m[out, inp]))
    return opts


def dress_product(op: ProductOperator, phases: AdjacencyPhases, tol: float = 1e-14) -> list[ProductOperator]:
    """``W^dagger op W`` as a sum of product operators.

    For each choice of off-diagonal units ``|s'_a><s_a|`` on a subset ``A``
    of the support, the phase layer contributes the scalar
    ``exp(i sum_{a<b in A} (phi_ab[s_a, s_b] - phi_ab[s'_a, s'_b]))`` and the
    diagonal ``diag_x exp(i sum_a (phi_ac[s_a, x] - phi_ac[s'_a, x]))`` on
    every other site ``c``.
    """
    table = phases.table
    n, q = phases.n_sites, phases.local_dim
    sites = sorted(op.factors)
    if not sites:
        return [op]
    options = [_site_options(np.asarray(op.factors[s]), tol) for s in sites]
    out = []
    for choice in itertools.product(*options):
        coeff = complex(op.coeff)
        factors = {}
        diag = {}
        units = []
        for s, c in zip(sites, choice):
            if c[0] == "diag":
                diag[s] = np.asarray(c[1], dtype=complex)
            else:
                o, i, val = c
                coeff *= val
                units.append((s, i, o))
                e = np.zeros((q, q), dtype=complex)
                e[o, i] = 1.0
                factors[s] = e
        phase = 0.0
        for (a, sa, oa), (b, sb, ob) in itertools.combinations(units, 2):
            phase += table[a, b, sa, sb] - table[a, b, oa, ob]
        coeff *= np.exp(1j * phase)
        if units:
            acted = {a for a, _, _ in units}
            for c in range(n):
                if c in acted:
                    continue
                ang = np.zeros(q)
                for a, sa, oa in units:
                    ang += table[a, c, sa, :] - table[a, c, oa, :]
                if np.any(ang != 0):
                    v = np.exp(1j * ang)
                    diag[c] = diag[c] * v if c in diag else v
        for s, d in diag.items():
            factors[s] = np.diag(d)
        out.append(ProductOperator(coeff, factors))
    return out


def dressed_operators(r: RageState, ops: Sequence[ProductOperator]):
    """Dressed backbone operators and, for each, the index of its source."""
    flat, owner = [], []
    for i, op in enumerate(ops):
        for d in dress_product(_rotate(op, r), r.phases):
            flat.append(d)
            owner.append(i)
    return flat, np.array(owner, dtype=int)


def _products(h) -> list[ProductOperator]:
    if isinstance(h, HamiltonianSum):
        return h.product_terms()
    if isinstance(h, (PauliString, ProductOperator)):
        return h.product_terms() if isinstance(h, PauliString) else [h]
    return list(h)


# -------------------------------------------------------- backbone dispatch

def backbone_values(b, ops: Sequence[ProductOperator]) -> np.ndarray:
    """Unnormalized backbone expectation values of product operators."""
    if not ops:
        return np.zeros(0, dtype=complex)
    if isinstance(b, MPSState):
        return mps_product_values(b, ops)
    if isinstance(b, TTSState):
        return tts_product_values(b, ops)
    from .peps import PEPSState, peps_product_values

    if isinstance(b, PEPSState):
        return peps_product_values(b, ops)
    raise TypeError(f"unsupported backbone {type(b).__name__}")


def backbone_norm_squared(b) -> float:
    return float(backbone_values(b, [ProductOperator(1.0, {})])[0].real)


def rage_product_values(r: RageState, ops: Sequence[ProductOperator], normalize: bool = True) -> np.ndarray:
    """``<psi|op|psi>`` for each product operator (normalized by default)."""
    flat, owner = dressed_operators(r, ops)
    flat.append(ProductOperator(1.0, {}))
    vals = backbone_values(r.backbone, flat)
    out = np.zeros(len(ops), dtype=complex)
    np.add.at(out, owner, vals[:-1])
    if normalize:
        out = out / vals[-1].real
    return out


def rage_expectation(r: RageState, h, hermitian_tol: float = 1e-8) -> float:
    """Normalized energy of a Hermitian operator."""
    ops = _products(h)
    if not ops:
        return 0.0
    val = rage_product_values(r, ops).sum()
    if abs(val.imag) > hermitian_tol * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian")
    return float(val.real)


# ------------------------------------------------------- reduced densities

def rage_reduced_density(r: RageState, support: Sequence[int], normalize: bool = True,
                         evaluator=None) -> np.ndarray:
    """Reduced density matrix on ``support`` (listed order).

    The element ``rho[i, j]`` is the expectation of ``|j><i|``; phases are
    handled by dressing and the rotations on the support are applied as
    ``V_S rho V_S^dagger`` at the end. ``evaluator`` maps a list of
    product operators to backbone values (defaults to exact backbone
    contraction).
    """
    support = [int(s) for s in support]
    n, q = r.n_sites, r.local_dim
    if len(set(support)) != len(support):
        raise ValueError("support sites must be distinct")
    if not support or any(s < 0 or s >= n for s in support):
        raise IndexError("support out of range")
    k = len(support)
    dim = q ** k
    ops = []
    for i in range(dim):
        ii = np.unravel_index(i, (q,) * k)
        for j in range(dim):
            jj = np.unravel_index(j, (q,) * k)
            factors = {}
            for s, a, b in zip(support, ii, jj):
                e = np.zeros((q, q), dtype=complex)
                e[b, a] = 1.0
                factors[s] = e
            ops.append(ProductOperator(1.0, factors))
    flat = []
    owner = []
    for idx, op in enumerate(ops):
        for d in dress_product(op, r.phases):
            flat.append(d)
            owner.append(idx)
    flat.append(ProductOperator(1.0, {}))
    vals = (evaluator or (lambda o: backbone_values(r.backbone, o)))(flat)
    rho = np.zeros(dim * dim, dtype=complex)
    np.add.at(rho, np.array(owner), vals[:-1])
    rho = rho.reshape(dim, dim)
    if r.rotations is not None:
        v = np.array([[1.0 + 0j]])
        for s in support:
            v = np.kron(v, r.rotations.matrix(s))
        rho = v @ rho @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    if normalize:
        rho = rho / np.trace(rho).real
    return rho


def rage_reduced_density_mps(r: RageState, support: Sequence[int], normalize: bool = True) -> np.ndarray:
    if not isinstance(r.backbone, MPSState):
        raise TypeError("requires an MPS backbone")
    if len(support) > 4:
        raise ValueError("support of at most 4 sites")
    return rage_reduced_density(r, support, normalize)


def rage_reduced_density_tts(r: RageState, support: Sequence[int], normalize: bool = True) -> np.ndarray:
    if not isinstance(r.backbone, TTSState):
        raise TypeError("requires a tree backbone")
    return rage_reduced_density(r, support, normalize)


# ------------------------------------------------------------ local updates

def _effective_pair(b, site, ops):
    if isinstance(b, MPSState):
        return mps_effective_pair(b, site, ops)
    if isinstance(b, TTSState):
        return tts_effective_pair(b, site, ops)
    raise TypeError("tensor updates need an MPS or tree backbone")


def _with_site_tensor(b, site, vec):
    if isinstance(b, MPSState):
        return b.with_tensor(site, vec.reshape(b.tensors[site].shape))
    ts = list(b.tensors)
    ts[site] = vec.reshape(ts[site].shape)
    return TTSState(b.topology, tuple(ts))


def rage_optimize_tensor(r: RageState, site: int, h, cutoff: float = 1e-12) -> RageState:
    """Optimal single-tensor update at fixed phases and rotations.

    The metric is the backbone metric since the phase layer and rotations
    are unitary. A degenerate metric leaves the state unchanged.
    """
    ops, _ = dressed_operators(r, _products(h))
    h_t, metric = _effective_pair(r.backbone, site, ops)
    try:
        sol = solve_generalized_eig_min(h_t, metric, cutoff, r.backbone.tensors[site])
    except DegenerateMetricError:
        warnings.warn(f"degenerate metric at site {site}; update skipped")
        return r
    return r.with_backbone(_with_site_tensor(r.backbone, site, sol.eigenvector))


def rotation_quadratic_form(r: RageState, site: int, h) -> np.ndarray:
    """Real symmetric ``M`` with ``energy(x) = x^T M x`` for unit ``x`` at ``site``."""
    if r.local_dim != 2:
        raise ValueError("rotations are defined for qubits only")
    base = r.with_rotations((r.rotations or LocalRotations.identity(r.n_sites)).with_param(site, [1, 0, 0, 0]))
    terms = _products(h)
    ops = []
    idx = []
    eye = np.eye(2, dtype=complex)
    for mu in range(4):
        for nu in range(mu, 4):
            pm, pn = ROTATION_BASIS[mu].conj().T, ROTATION_BASIS[nu]
            for t in terms:
                f = dict(t.factors)
                f[site] = pm @ f.get(site, eye) @ pn
                ops.append(ProductOperator(t.coeff, f))
                idx.append((mu, nu))
    vals = rage_product_values(base, ops)
    g = np.zeros((4, 4), dtype=complex)
    for (mu, nu), v in zip(idx, vals):
        g[mu, nu] += v
    g = g + np.triu(g, 1).conj().T
    m = g.real
    return 0.5 * (m + m.T)


def rage_optimize_rotation(r: RageState, site: int, h) -> RageState:
    """Optimal unit ``x`` at ``site``: lowest eigenvector of a 4x4 real form."""
    m = rotation_quadratic_form(r, site, h)
    w, v = np.linalg.eigh(m)
    x = v[:, 0]
    rot = r.rotations or LocalRotations.identity(r.n_sites)
    cur = rot.params[site]
    if float(cur @ m @ cur) <= w[0]:
        return r
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return r.with_rotations(rot.with_param(site, x))


@dataclass(frozen=True)
class PhaseOptimizationCoefficients:
    """``energy(phi) = a + b cos(phi) + gamma sin(phi)`` for one pair."""

    a: float
    b: float
    gamma: float

    def energy(self, phi) -> np.ndarray:
        return self.a + self.b * np.cos(phi) + self.gamma * np.sin(phi)

    def minimizer(self, default: float = 0.0) -> float:
        if self.b == 0 and self.gamma == 0:
            return default
        return float(np.mod(np.arctan2(-self.gamma, -self.b), 2 * np.pi))

    def minimum(self) -> float:
        return self.a - float(np.hypot(self.b, self.gamma))


def _energy_at(r: RageState, a: int, b: int, phi: float, ops) -> float:
    val = rage_product_values(r.with_phases(r.phases.with_angle(a, b, phi)), ops).sum()
    return float(val.real)


def rage_phase_coefficients(r: RageState, pair: tuple[int, int], h, check_angle: float = 2.0,
                            tol: float = 1e-9) -> PhaseOptimizationCoefficients:
    """Trigonometric coefficients from probes at 0, pi/2 and pi.

    A fourth probe at ``check_angle`` validates the model.
    """
    if r.local_dim != 2:
        raise ValueError("phase coefficients are defined for qubits only")
    a, b = pair
    if a == b:
        raise ValueError("pair must have distinct sites")
    ops = _products(h)
    e0 = _energy_at(r, a, b, 0.0, ops)
    epi = _energy_at(r, a, b, np.pi, ops)
    ehalf = _energy_at(r, a, b, np.pi / 2, ops)
    avg = 0.5 * (e0 + epi)
    coef = PhaseOptimizationCoefficients(avg, 0.5 * (e0 - epi), ehalf - avg)
    check = _energy_at(r, a, b, check_angle, ops)
    scale = max(1.0, abs(e0) + abs(epi) + abs(ehalf))
    if abs(coef.energy(check_angle) - check) > tol * scale:
        raise RuntimeError(f"phase model failed validation at pair {pair}: "
                           f"{coef.energy(check_angle)!r} vs {check!r}")
    # exact zeros for pairs that do not matter
    if abs(coef.b) < 1e-15 * scale and abs(coef.gamma) < 1e-15 * scale:
        coef = PhaseOptimizationCoefficients(coef.a, 0.0, 0.0)
    return coef


def rage_optimize_phase(r: RageState, pair: tuple[int, int], h) -> RageState:
    a, b = pair
    coef = rage_phase_coefficients(r, pair, h)
    cur = r.phases.get(a, b)
    best = coef.minimizer(default=cur)
    if coef.energy(best) >= coef.energy(cur):
        return r
    return r.with_phases(r.phases.with_angle(a, b, best))


# ---------------------------------------------------- alternating minimizer

@dataclass
class AlternatingResult:
    state: RageState
    energies: list
    timing: dict = field(default_factory=dict)
    converged: bool = False
    stalled: bool = False
    rounds: int = 0

    def __iter__(self):
        return iter((self.state, self.energies, self.timing))


def _sweep_backbone(r: RageState, h, sweeps: int, rel_tol: float) -> tuple[RageState, float]:
    ops, _ = dressed_operators(r, _products(h))
    b = r.backbone
    if isinstance(b, MPSState):
        ts = list(b.tensors)
        res = sweep_product_operators(ts, ops, sweeps, rel_tol)
        new = MPSState(tuple(ts), b.boundary)
    elif isinstance(b, TTSState):
        res = sweep_tree_product_operators(b, ops, sweeps, rel_tol)
        new = res.state
    else:
        raise TypeError("tensor updates need an MPS or tree backbone")
    return r.with_backbone(new), res.energies[-1]


def _flat_params(r: RageState, use_phases: bool, use_rot: bool):
    parts = []
    if use_phases:
        parts.append(np.array([r.phases.get(a, b) for a, b in r.phases.pairs()]))
    if use_rot:
        parts.append(np.array(r.rotations.params).reshape(-1))
    return np.concatenate(parts) if parts else np.zeros(0)


def _from_flat(r: RageState, p, use_phases: bool, use_rot: bool) -> RageState:
    n = r.n_sites
    k = 0
    if use_phases:
        phi = np.zeros((n, n))
        for a, b in r.phases.pairs():
            phi[a, b] = phi[b, a] = p[k]
            k += 1
        r = r.with_phases(AdjacencyPhases.from_matrix(phi))
    if use_rot:
        x = np.asarray(p[k:k + 4 * n]).reshape(n, 4)
        r = r.with_rotations(LocalRotations(x / np.linalg.norm(x, axis=1, keepdims=True)))
    return r


def gradient_refinement(r: RageState, h, use_phases: bool = True, use_rotations: bool = True,
                        step: float = 1e-6, max_halvings: int = 30) -> tuple[RageState, float]:
    """One finite-difference gradient step over phases and rotations with backtracking."""
    use_rot = use_rotations and r.rotations is not None
    use_phases = use_phases and r.local_dim == 2
    e0 = rage_expectation(r, h)
    p0 = _flat_params(r, use_phases, use_rot)
    if p0.size == 0:
        return r, e0
    grad = np.zeros_like(p0)
    for i in range(p0.size):
        up, dn = p0.copy(), p0.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (rage_expectation(_from_flat(r, up, use_phases, use_rot), h)
                   - rage_expectation(_from_flat(r, dn, use_phases, use_rot), h)) / (2 * step)
    gn = np.linalg.norm(grad)
    if gn < 1e-12:
        return r, e0
    t = 1.0 / gn
    for _ in range(max_halvings):
        cand = _from_flat(r, p0 - t * grad, use_phases, use_rot)
        e = rage_expectation(cand, h)
        if e < e0:
            return cand, e
        t *= 0.5
    return r, e0


def rage_alternating_minimize(r: RageState, h, schedule: Sequence[str] = FAMILIES, rel_tol: float = 1e-10,
                              max_rounds: int = 50, tensor_sweeps: int = 2, gradient: bool = True,
                              stall_rounds: int = 5, stall_tol: float = 1e-7) -> AlternatingResult:
    """Interleave tensor sweeps, rotation updates and phase updates.

    ``energies[0]`` is the starting energy; one entry follows every family
    update, so the trace is non-increasing. Convergence is declared when a
    round improves by less than ``rel_tol`` (relative) and a gradient pass
    over phases and rotations does not help. If the per-round improvement
    stays below ``stall_tol`` for ``stall_rounds`` rounds the run stops and
    is reported as stalled.
    """
    schedule = [s for s in schedule]
    for s in schedule:
        if s not in FAMILIES:
            raise ValueError(f"unknown parameter family {s!r}")
    if "rotations" in schedule and r.rotations is None:
        if r.local_dim != 2:
            raise ValueError("rotations are defined for qubits only")
        r = r.with_rotations(LocalRotations.identity(r.n_sites))
    if "phases" in schedule and r.local_dim != 2:
        raise ValueError("phase updates are implemented for qubits only")
    ops = _products(h)
    t_start = time.perf_counter()
    timing = {f: 0.0 for f in FAMILIES}
    timing["gradient"] = 0.0
    current = rage_expectation(r, ops)
    trace = [current]
    res = AlternatingResult(r, trace, timing)
    if not schedule:
        res.converged = True
        timing["total"] = time.perf_counter() - t_start
        return res

    def record(new_r, e):
        nonlocal r, current
        if e <= current + 1e-10 * max(1.0, abs(current)):
            r, current = new_r, min(e, current)
        trace.append(current)

    small = 0
    grad_tried = False
    for rnd in range(max_rounds):
        start_e = current
        for fam in schedule:
            t0 = time.perf_counter()
            if fam == "tensors":
                new_r, e = _sweep_backbone(r, ops, tensor_sweeps, rel_tol)
                record(new_r, rage_expectation(new_r, ops))
            elif fam == "rotations":
                new_r = r
                for k in range(r.n_sites):
                    new_r = rage_optimize_rotation(new_r, k, ops)
                record(new_r, rage_expectation(new_r, ops))
            else:
                new_r = r
                for pair in r.phases.pairs():
                    new_r = rage_optimize_phase(new_r, pair, ops)
                record(new_r, rage_expectation(new_r, ops))
            timing[fam] += time.perf_counter() - t0
        res.rounds = rnd + 1
        gain = start_e - current
        scale = max(abs(current), 1e-12)
        if gain <= rel_tol * scale:
            use_grad = gradient and not grad_tried and ("phases" in schedule or "rotations" in schedule)
            if use_grad:
                grad_tried = True
                t0 = time.perf_counter()
                new_r, e = gradient_refinement(r, ops, "phases" in schedule, "rotations" in schedule)
                timing["gradient"] += time.perf_counter() - t0
                if current - e > rel_tol * scale:
                    record(new_r, e)
                    continue
            res.converged = True
            break
        small = small + 1 if gain <= stall_tol * scale else 0
        if small >= stall_rounds:
            res.stalled = True
            warnings.warn("alternating minimization stalled")
            break
    res.state = r
    timing["total"] = time.perf_counter() - t_start
    return res


def rage_multistart_minimize(initial_states: Sequence[RageState], h, **kwargs) -> AlternatingResult:
    """Run the alternating minimizer from several starts and keep the lowest."""
    best = None
    for r in initial_states:
        res = rage_alternating_minimize(r, h, **kwargs)
        if best is None or res.energies[-1] < best.energies[-1]:
            best = res
    if best is None:
        raise ValueError("no initial states")
    return best


# ------------------------------------------------------ operator conjugation

@dataclass(frozen=True)
class OperatorMPO:
    """Open matrix product operator, tensors ``(left, right, out, in)``."""

    tensors: tuple

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def matrix(self) -> np.ndarray:
        acc = self.tensors[0][0]  # (r, o, i)
        for t in self.tensors[1:]:
            acc = np.einsum("aoi,abpj->bopij", acc, t)
            acc = acc.reshape(acc.shape[0], acc.shape[1] * acc.shape[2], -1)
        return acc[0]

    def apply(self, m: MPSState) -> MPSState:
        """``O|m>`` as an open MPS with bonds multiplied by the MPO bonds."""
        ts = []
        for a, w in zip(m.tensors, self.tensors):
            t = np.einsum("lrs,abos->larbo", a, w)
            dl, wl, dr, wr, q = t.shape
            ts.append(t.reshape(dl * wl, dr * wr, q))
        return MPSState(tuple(ts), m.boundary)


def mpo_from_products(ops: Sequence[ProductOperator], n_sites: int, q: int = 2) -> OperatorMPO:
    """Direct-sum MPO of a sum of product operators (bond = number of terms)."""
    k = len(ops)
    eye = np.eye(q, dtype=complex)
    ts = []
    for site in range(n_sites):
        mats = [op.factors.get(site, eye) for op in ops]
        if site == 0:
            mats = [op.coeff * mt for op, mt in zip(ops, mats)]
        if n_sites == 1:
            t = sum(mats).reshape(1, 1, q, q)
        elif site == 0:
            t = np.stack(mats)[None]
        elif site == n_sites - 1:
            t = np.stack(mats)[:, None]
        else:
            t = np.zeros((k, k, q, q), dtype=complex)
            for i, mt in enumerate(mats):
                t[i, i] = mt
        ts.append(np.asarray(t, dtype=complex))
    return OperatorMPO(tuple(ts))


def pauli_conjugate_through_phases(p: PauliString, phases: AdjacencyPhases,
                                   rotations: LocalRotations | None = None) -> OperatorMPO:
    """``U^dagger p U`` with ``U = (prod V_k) W(phi)``, as an MPO.

    Without rotations a Pauli of support at most two yields at most four
    dressed products (bond dimension <= 4); general rotations can produce
    up to nine.
    """
    if phases.local_dim != 2:
        raise ValueError("qubit phases required")
    if len(p.support) > 2:
        raise ValueError("Pauli support must be at most 2")
    n = phases.n_sites
    if p.n_sites != n:
        raise ValueError("site counts differ")
    op = p.product_terms()[0]
    if rotations is not None:
        op = ProductOperator(op.coeff, {s: rotations.matrix(s).conj().T @ m @ rotations.matrix(s)
                                        for s, m in op.factors.items()})
    terms = dress_product(op, phases)
    return mpo_from_products(terms, n, 2)


def pauli_conjugate_through_clifford(p: PauliString, circuit: Sequence[tuple]) -> PauliString:
    """``U^dagger p U`` for a Clifford circuit ``U`` given as ``(gate, sites)`` pairs in time order."""
    out = Pauli.from_string(p) if abs(abs(complex(p.coeff)) - 1) < 1e-12 else None
    if out is None:
        raise ValueError("Pauli coefficient must be +1 or -1")
    for gate, sites in reversed(list(circuit)):
        sites = (sites,) if isinstance(sites, int) else tuple(sites)
        out = conjugate_pauli(out, gate, sites, dagger_first=True)
    return out.to_string()
