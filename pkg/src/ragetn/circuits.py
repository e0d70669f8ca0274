"""Quantum circuits on RAGE states.

Controlled-phase gates only change the phase table. Diagonal one-qubit
gates commute with the phase layer and are absorbed into the backbone
exactly; other one-qubit gates are absorbed variationally by maximizing
the overlap with the exact target, optionally together with updates of
the acted row of the phase table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .exact_oracle import StateVector, apply_local, expand, fidelity
from .hamiltonians import HamiltonianSum, ProductOperator
from .mps import (MPSState, apply_product_sum, apply_single_site, compress_variational, mps_norm_squared,
                  mps_product_values, mps_truncate, product_mps)
from .rage import RageState, dress_product
from .tensor_core import make_rng
from .wgs import AdjacencyPhases

TWO_PI = 2 * np.pi
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.diag([1.0 + 0j, 0.0])
P1 = np.diag([0.0 + 0j, 1.0])


def phase_gate_matrix(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)])


@dataclass(frozen=True)
class Gate:
    """``kind`` is ``"single"`` (site, 2x2 matrix) or ``"cphase"`` (two sites, angle)."""

    kind: str
    sites: tuple
    matrix: np.ndarray | None = None
    angle: float = 0.0

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        if self.kind == "single":
            if len(sites) != 1:
                raise ValueError("single-qubit gate acts on one site")
            u = np.asarray(self.matrix, dtype=complex)
            if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12):
                raise ValueError("single-qubit gate must be a 2x2 unitary")
            u = u.copy()
            u.setflags(write=False)
            object.__setattr__(self, "matrix", u)
        elif self.kind == "cphase":
            if len(sites) != 2 or sites[0] == sites[1]:
                raise ValueError("controlled phase needs two distinct sites")
            object.__setattr__(self, "angle", float(np.mod(self.angle, TWO_PI)))
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if min(sites) < 0:
            raise ValueError("negative site index")

    @classmethod
    def single(cls, site: int, u) -> "Gate":
        return cls("single", (site,), u)

    @classmethod
    def cphase(cls, a: int, b: int, angle: float) -> "Gate":
        return cls("cphase", (a, b), None, angle)

    @property
    def is_diagonal(self) -> bool:
        return self.kind == "cphase" or bool(self.matrix[0, 1] == 0 and self.matrix[1, 0] == 0)


@dataclass(frozen=True)
class Circuit:
    n_sites: int
    gates: tuple
    seed: int | None = None
    global_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.sites) >= self.n_sites:
                raise ValueError(f"gate {g.kind} on {g.sites} outside {self.n_sites} sites")

    def __len__(self):
        return len(self.gates)


# ------------------------------------------------------------ dense oracle

def apply_gate_dense(psi: np.ndarray, g: Gate) -> np.ndarray:
    """Apply a gate to a state tensor with one axis per site (extra trailing axes allowed)."""
    if g.kind == "single":
        return apply_local(psi, g.sites[0], g.matrix)
    a, b = g.sites
    out = np.array(psi, dtype=complex)
    idx = [slice(None)] * psi.ndim
    idx[a] = 1
    idx[b] = 1
    out[tuple(idx)] *= np.exp(1j * g.angle)
    return out


def circuit_unitary(c: Circuit) -> np.ndarray:
    n = c.n_sites
    dim = 2 ** n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        u = apply_gate_dense(u, g)
    return np.exp(1j * c.global_phase) * u.reshape(dim, dim)


def run_dense(c: Circuit, state: StateVector) -> StateVector:
    psi = state.tensor()
    for g in c.gates:
        psi = apply_gate_dense(psi, g)
    return StateVector(np.exp(1j * c.global_phase) * psi.reshape(-1), c.n_sites, 2)


# --------------------------------------------------------------- generators

def random_circuit(n_sites: int, n_blocks: int, seed=0) -> Circuit:
    """Blocks of one random phase gate followed by one random controlled phase."""
    if n_sites < 2:
        raise ValueError("need at least two sites")
    if n_blocks < 1:
        raise ValueError("need at least one block")
    rng = make_rng(seed)
    gates = []
    for _ in range(n_blocks):
        site = int(rng.integers(n_sites))
        gates.append(Gate.single(site, phase_gate_matrix(rng.uniform(0, TWO_PI))))
        a, b = sorted(int(s) for s in rng.choice(n_sites, size=2, replace=False))
        gates.append(Gate.cphase(a, b, rng.uniform(0, TWO_PI)))
    return Circuit(n_sites, tuple(gates), seed if isinstance(seed, int) else None)


def qft_circuit(n_sites: int) -> Circuit:
    """Hadamards and controlled phases ``pi / 2^(j-i)``; the final swaps are omitted,
    so the output register is bit-reversed."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    gates = []
    for i in range(n_sites):
        gates.append(Gate.single(i, HADAMARD))
        for j in range(i + 1, n_sites):
            gates.append(Gate.cphase(i, j, np.pi / 2 ** (j - i)))
    return Circuit(n_sites, tuple(gates))


def _exp_pauli(letter: str, theta: float) -> np.ndarray:
    """``exp(-i theta P)``."""
    p = {"X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}[letter]
    return np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * p


def trotter_circuit(h: HamiltonianSum, dt: float, n_steps: int) -> Circuit:
    """First-order Trotter circuit for ``exp(-i H dt n_steps)``.

    ``ZZ`` terms become a controlled phase ``-4 theta`` with phase gates
    ``2 theta`` on both sites and a global phase ``-theta``
    (``theta = coeff * dt``); one-site Pauli terms are exponentiated
    exactly.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    n = h.n_sites
    gates = []
    gphase = 0.0
    parsed = []
    for t in h.terms:
        letters = getattr(t, "letters", None)
        if letters is None:
            raise ValueError("Trotter circuits need Pauli-string terms")
        c = complex(t.coeff)
        if abs(c.imag) > 1e-14:
            raise ValueError("term coefficients must be real")
        sup = [(k, letters[k]) for k in range(n) if letters[k] != "I"]
        if len(sup) == 1:
            parsed.append(("single", sup, c.real))
        elif len(sup) == 2 and sup[0][1] == "Z" and sup[1][1] == "Z":
            parsed.append(("zz", sup, c.real))
        elif len(sup) == 0:
            parsed.append(("const", sup, c.real))
        else:
            raise ValueError(f"unsupported term {letters}")
    for _ in range(n_steps):
        for kind, sup, c in parsed:
            theta = c * dt
            if theta == 0:
                continue
            if kind == "const":
                gphase -= theta
            elif kind == "single":
                (k, letter), = sup
                gates.append(Gate.single(k, _exp_pauli(letter, theta)))
            else:
                (a, _), (b, _) = sup
                gates.append(Gate.cphase(a, b, -4 * theta))
                gates.append(Gate.single(a, phase_gate_matrix(2 * theta)))
                gates.append(Gate.single(b, phase_gate_matrix(2 * theta)))
                gphase -= theta
    return Circuit(n, tuple(gates), global_phase=gphase)


# ------------------------------------------------------------- RAGE updates

def apply_controlled_phase(r: RageState, gate: Gate) -> RageState:
    """Exact: the angle is added to the phase table."""
    if gate.kind != "cphase":
        raise ValueError("controlled-phase gate required")
    a, b = gate.sites
    return r.with_phases(r.phases.shifted(a, b, gate.angle))


@dataclass(frozen=True)
class GateTarget:
    """The exact target ``U_site W(phases) |backbone>`` of a one-qubit gate."""

    backbone: MPSState
    phases: AdjacencyPhases
    site: int
    u: np.ndarray

    def ket_ops(self, phases: AdjacencyPhases) -> list[ProductOperator]:
        """Operators ``O_i`` with ``W(phases)^dagger |target> = sum_i O_i |backbone>``.

        ``phases`` may differ from the target phases only on the acted row.
        """
        diff = self.phases.matrix - phases.matrix
        mask = np.ones_like(diff, dtype=bool)
        mask[self.site, :] = False
        mask[:, self.site] = False
        if np.any(np.abs(np.angle(np.exp(1j * diff[mask]))) > 1e-12):
            raise ValueError("phases may only differ on the acted row")
        dressed = dress_product(ProductOperator(1.0, {self.site: np.asarray(self.u)}), self.phases)
        row = diff[self.site]
        if not np.any(np.abs(np.angle(np.exp(1j * row))) > 0):
            return dressed
        rest = {k: phase_gate_matrix(row[k]) for k in range(len(row)) if k != self.site and row[k] != 0}
        rest[self.site] = P1
        row_ops = [ProductOperator(1.0, {self.site: P0}), ProductOperator(1.0, rest)]
        return [a @ b for a in row_ops for b in dressed]

    def overlap(self, r: RageState, extra: ProductOperator | None = None) -> complex:
        """``<target| extra |r>`` for a diagonal ``extra`` (identity if None)."""
        ops = self.ket_ops(r.phases)
        if extra is not None:
            ops = [extra @ o for o in ops]
        val = mps_product_values(self.backbone, ops, bra=r.backbone).sum()
        return complex(np.conj(val))

    def fidelity(self, r: RageState) -> float:
        ov = self.overlap(r)
        return float(abs(ov) ** 2 / (mps_norm_squared(self.backbone) * mps_norm_squared(r.backbone)))


def _require_plain(r: RageState):
    if not isinstance(r.backbone, MPSState) or r.backbone.boundary != "open":
        raise ValueError("circuit updates need an open MPS backbone")
    if r.rotations is not None and not all(r.rotations.is_identity(k) for k in range(r.n_sites)):
        raise ValueError("circuit updates need identity local rotations")


def update_adjacency_row(r: RageState, acted_site: int, k: int, target: GateTarget) -> tuple[RageState, float]:
    """Best controlled phase on ``(acted_site, k)`` toward ``target``.

    The variation ``alpha (1 - P11) + beta P11`` (``P11`` projects onto
    ``|11>`` of the pair) has a rank-one quotient whose maximizer sets the
    phase change to ``arg(t0 conj(t1))`` with ``t0 = <T|(1 - P11)|psi>`` and
    ``t1 = <T|P11|psi>``. That unitary choice is also the best
    controlled phase, so the fidelity bound never decreases.
    """
    if k == acted_site:
        raise ValueError("target site must differ from the acted site")
    p11 = ProductOperator(1.0, {acted_site: P1, k: P1})
    t_all = target.overlap(r)
    t1 = target.overlap(r, p11)
    t0 = t_all - t1
    norm = mps_norm_squared(target.backbone) * mps_norm_squared(r.backbone)
    before = abs(t_all) ** 2 / norm
    if abs(t0) == 0 or abs(t1) == 0:
        return r, float(before)
    delta = float(np.angle(t0 * np.conj(t1)))
    after = abs(t0 + np.exp(1j * delta) * t1) ** 2 / norm
    if after <= before:
        return r, float(before)
    return r.with_phases(r.phases.shifted(acted_site, k, delta)), float(after)


def apply_single_qubit_variational(r: RageState, gate: Gate, max_bond: int | None = None, sweeps: int = 2,
                                   row_updates: bool = False, target: GateTarget | None = None
                                   ) -> tuple[RageState, float]:
    """Absorb a one-qubit gate into the backbone by overlap maximization.

    Two starting points are compressed and the better is kept: the gate
    applied directly to the site tensor, and the exact dressed operator
    applied to the backbone followed by SVD truncation to ``max_bond``.
    With ``row_updates`` the acted row of the phase table is then
    optimized pair by pair and the backbone recompressed. Returns the new
    state and the fidelity bound with the exact target.
    """
    if gate.kind != "single":
        raise ValueError("single-qubit gate required")
    _require_plain(r)
    site = gate.sites[0]
    y = r.backbone
    d = max_bond or y.max_bond
    if gate.is_diagonal and target is None:
        return r.with_backbone(apply_single_site(y, site, gate.matrix)), 1.0
    if target is None:
        target = GateTarget(y, r.phases, site, gate.matrix)

    def compress(state: RageState) -> tuple[RageState, float]:
        ops = target.ket_ops(state.phases)
        guesses = [apply_single_site(state.backbone, site, gate.matrix)]
        exact = apply_product_sum(target.backbone, ops)
        guesses.append(mps_truncate(exact, d)[0])
        best = None
        for g in guesses:
            new, _ = compress_variational(ops, target.backbone, g, sweeps)
            cand = state.with_backbone(new)
            f = target.fidelity(cand)
            if best is None or f > best[1]:
                best = (cand, f)
        return best

    out, fid = compress(r)
    if row_updates:
        for k in range(r.n_sites):
            if k != site:
                out, fid = update_adjacency_row(out, site, k, target)
        cand, f2 = compress(out)
        if f2 >= fid:
            out, fid = cand, f2
    return out, float(min(fid, 1.0 + 1e-12))


def incremental_gate_schedule(u, n_steps: int) -> list[np.ndarray]:
    """``n_steps`` equal fractional powers of a unitary (principal logarithm).

    An eigenvalue of exactly -1 takes the branch angle +pi.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    u = np.asarray(u, dtype=complex)
    t, z = sla.schur(u, output="complex")
    lam = np.angle(np.diag(t))
    frac = z @ np.diag(np.exp(1j * lam / n_steps)) @ z.conj().T
    return [frac.copy() for _ in range(n_steps)]


def apply_gate_incremental(r: RageState, gate: Gate, n_steps: int, max_bond: int | None = None,
                           sweeps: int = 2, row_updates: bool = True) -> tuple[RageState, float]:
    """Apply a one-qubit gate as ``n_steps`` fractional gates, each with row updates.

    Step ``j`` fits the partial gate ``U^(j/n)`` applied to the *input*
    state, warm-started from step ``j - 1``; fitting each piece to the
    previous approximation instead lets the errors compound. Returns the
    state and its fidelity bound with the full target.
    """
    _require_plain(r)
    site = gate.sites[0]
    acc = np.eye(gate.matrix.shape[0], dtype=complex)
    cur, bound = r, 1.0
    for piece in incremental_gate_schedule(gate.matrix, n_steps):
        acc = piece @ acc
        target = GateTarget(r.backbone, r.phases, site, acc)
        cur, bound = apply_single_qubit_variational(cur, Gate.single(site, piece), max_bond, sweeps,
                                                    row_updates, target=target)
    return cur, bound


# ------------------------------------------------------------ MPS updates

def mps_apply_gate(m: MPSState, gate: Gate, max_bond: int, sweeps: int = 2) -> tuple[MPSState, float]:
    """Gate on a plain open MPS; controlled phases are applied exactly, cut to
    ``max_bond`` by SVD and refined by overlap sweeps."""
    if gate.kind == "single":
        return apply_single_site(m, gate.sites[0], gate.matrix), 1.0
    a, b = gate.sites
    ops = [ProductOperator(1.0, {a: P0}), ProductOperator(1.0, {a: P1, b: phase_gate_matrix(gate.angle)})]
    exact = apply_product_sum(m, ops)
    guess, _ = mps_truncate(exact, max_bond)
    return compress_variational(ops, m, guess, sweeps)


# -------------------------------------------------------------- benchmarks

def plus_rage_state(n_sites: int, bond_dim: int = 1) -> RageState:
    plus = np.ones(2) / np.sqrt(2)
    return RageState(product_mps([plus] * n_sites, bond_dim=bond_dim), AdjacencyPhases.zeros(n_sites))


def simulate_with_fidelity(c: Circuit, initial: RageState, methods: Sequence[str] = ("mps", "rage"),
                           max_bond: int | None = None, sweeps: int = 2) -> dict:
    """Per-gate oracle fidelity for each method.

    ``"mps"`` evolves the backbone alone (the phase table must be zero);
    ``"rage"`` absorbs controlled phases into the phase table and one-qubit
    gates into the backbone. Returns ``{method: list of fidelities}`` with
    one entry per gate.
    """
    if c.n_sites > 14:
        raise ValueError("oracle comparison limited to 14 sites")
    if c.n_sites != initial.n_sites:
        raise ValueError("circuit and state sizes differ")
    d = max_bond or initial.backbone.max_bond
    dense = expand(initial).tensor()
    states = {}
    for meth in methods:
        if meth == "mps":
            if np.any(initial.phases.table):
                raise ValueError("the MPS method starts from a state without phases")
            states[meth] = initial.backbone
        elif meth == "rage":
            states[meth] = initial
        else:
            raise ValueError(f"unknown method {meth!r}")
    traces = {meth: [] for meth in methods}
    for g in c.gates:
        dense = apply_gate_dense(dense, g)
        ref = StateVector(dense.reshape(-1), c.n_sites)
        for meth in methods:
            st = states[meth]
            if meth == "mps":
                st, _ = mps_apply_gate(st, g, d, sweeps)
            elif g.kind == "cphase":
                st = apply_controlled_phase(st, g)
            else:
                st, _ = apply_single_qubit_variational(st, g, d, sweeps)
            states[meth] = st
            traces[meth].append(fidelity(expand(st), ref))
    return traces


@dataclass
class FidelityStudy:
    n_sites: int
    n_blocks: int
    seeds: list
    max_bond: int
    mean: dict = field(default_factory=dict)
    per_seed: dict = field(default_factory=dict)
    cphase_fidelities: list = field(default_factory=list)


def random_circuit_study(n_sites: int, n_blocks: int, seeds: Sequence[int], max_bond: int,
                         methods: Sequence[str] = ("mps", "rage")) -> FidelityStudy:
    """Seed-averaged fidelity after each block of :func:`random_circuit` from ``|+>^N``."""
    study = FidelityStudy(n_sites, n_blocks, list(seeds), max_bond)
    for meth in methods:
        study.per_seed[meth] = []
    for s in seeds:
        c = random_circuit(n_sites, n_blocks, s)
        tr = simulate_with_fidelity(c, plus_rage_state(n_sites, max_bond), methods, max_bond)
        for meth in methods:
            study.per_seed[meth].append(tr[meth][1::2])
        if "rage" in tr:
            study.cphase_fidelities.extend(tr["rage"][1::2])
    for meth in methods:
        study.mean[meth] = np.mean(np.array(study.per_seed[meth]), axis=0).tolist()
    return study
