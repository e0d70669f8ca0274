"""Projected entangled pair states on open rectangular grids.

Site ``(x, y)`` has index ``y * lx + x``. Every tensor has legs
``(up, left, down, right, phys)``; legs that would leave the grid are
kept with dimension 1 so all tensors have the same rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonians import ProductOperator
from .mps import MPSState, mps_truncate
from .tensor_core import as_tensor, make_rng, random_complex

EXACT_MAX_SITES = 12


@dataclass(frozen=True)
class PEPSState:
    lx: int
    ly: int
    tensors: tuple

    def __post_init__(self):
        ts = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if self.lx < 1 or self.ly < 1 or len(ts) != self.lx * self.ly:
            raise ValueError("need lx * ly tensors")
        q = ts[0].shape[4]
        for y in range(self.ly):
            for x in range(self.lx):
                t = self.tensor(x, y)
                if t.ndim != 5 or t.shape[4] != q:
                    raise ValueError(f"tensor at {(x, y)} must have legs (u, l, d, r, s)")
                u, l, d, r, _ = t.shape
                if (y == 0 and u != 1) or (x == 0 and l != 1) or (y == self.ly - 1 and d != 1) \
                        or (x == self.lx - 1 and r != 1):
                    raise ValueError(f"boundary leg of tensor {(x, y)} must have dimension 1")
                if x + 1 < self.lx and r != self.tensor(x + 1, y).shape[1]:
                    raise ValueError(f"horizontal bond mismatch at {(x, y)}")
                if y + 1 < self.ly and d != self.tensor(x, y + 1).shape[0]:
                    raise ValueError(f"vertical bond mismatch at {(x, y)}")

    def tensor(self, x: int, y: int) -> np.ndarray:
        return self.tensors[y * self.lx + x]

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    @property
    def local_dim(self) -> int:
        return self.tensors[0].shape[4]

    @property
    def max_bond(self) -> int:
        return max(max(t.shape[:4]) for t in self.tensors)


def random_peps(lx: int, ly: int, bond_dim: int, local_dim: int = 2, seed=0) -> PEPSState:
    """Entries uniform on [-1, 1] + i[-1, 1]."""
    rng = make_rng(seed)
    ts = []
    for y in range(ly):
        for x in range(lx):
            shape = (1 if y == 0 else bond_dim, 1 if x == 0 else bond_dim,
                     1 if y == ly - 1 else bond_dim, 1 if x == lx - 1 else bond_dim, local_dim)
            ts.append(random_complex(shape, rng))
    return PEPSState(lx, ly, tuple(ts))


def product_peps(vectors, lx: int, ly: int) -> PEPSState:
    ts = [np.asarray(v, dtype=complex).reshape(1, 1, 1, 1, -1) for v in vectors]
    return PEPSState(lx, ly, tuple(ts))


def _site_ops(p: PEPSState, ops):
    """Normalize ``ops`` (dict site -> matrix, or one entry per site) to a dict."""
    if ops is None:
        return {}
    if isinstance(ops, dict):
        return {int(k): np.asarray(v) for k, v in ops.items()}
    return {k: np.asarray(v) for k, v in enumerate(ops) if v is not None}


def peps_b_tensor(p: PEPSState, site: int, op=None) -> np.ndarray:
    """Doubled tensor ``sum_{s,s'} <s'|op|s> A^s (x) conj(A^{s'})`` with merged legs."""
    if not 0 <= site < p.n_sites:
        raise IndexError("site out of range")
    a = p.tensors[site]
    t = a if op is None else np.tensordot(a, np.asarray(op, dtype=complex), axes=([4], [1]))
    b = np.einsum("abcds,efghs->aebfcgdh", t, a.conj())
    u, l, d, r = (a.shape[i] ** 2 for i in range(4))
    return b.reshape(u, l, d, r)


def peps_exact_contract(p: PEPSState, ops=None) -> complex:
    """``<p| prod ops |p>`` by exact contraction of the doubled grid."""
    if p.n_sites > EXACT_MAX_SITES:
        raise ValueError(f"exact contraction limited to {EXACT_MAX_SITES} sites")
    factors = _site_ops(p, ops)
    lx, ly = p.lx, p.ly
    labels = {}

    def lab(key):
        return labels.setdefault(key, len(labels))

    operands = []
    for y in range(ly):
        for x in range(lx):
            k = y * lx + x
            b = peps_b_tensor(p, k, factors.get(k))
            legs = [lab(("v", x, y - 1)), lab(("h", x - 1, y)), lab(("v", x, y)), lab(("h", x, y))]
            operands += [b, legs]
    return complex(np.einsum(*operands, [], optimize="greedy"))


@dataclass
class BoundaryContractionReport:
    chi: int
    discarded: list = field(default_factory=list)
    value: complex = 0j


def peps_boundary_contract(p: PEPSState, chi: int, ops=None) -> tuple[complex, BoundaryContractionReport]:
    """Approximate ``<p| prod ops |p>`` by a boundary MPS swept top to bottom.

    Each row of doubled tensors acts as an MPO on the boundary MPS, whose
    bonds are then cut back to ``chi`` by SVD. The report lists the
    relative discarded weight for every row.
    """
    if chi < 1:
        raise ValueError("chi must be >= 1")
    factors = _site_ops(p, ops)
    lx, ly = p.lx, p.ly
    report = BoundaryContractionReport(chi)
    rows = [[peps_b_tensor(p, y * lx + x, factors.get(y * lx + x)) for x in range(lx)] for y in range(ly)]
    # boundary tensors (l, r, down)
    bnd = [b[0].transpose(0, 2, 1) for b in rows[0]]
    for y in range(1, ly):
        new = []
        for m, b in zip(bnd, rows[y]):
            t = np.tensordot(m, b, axes=([2], [0]))  # (l, r, l', d', r')
            t = t.transpose(0, 2, 1, 4, 3)
            dl, dl2, dr, dr2, dd = t.shape
            new.append(t.reshape(dl * dl2, dr * dr2, dd))
        bnd = new
        if y < ly - 1 and lx > 1:
            scale = max(np.abs(t).max() for t in bnd)
            st, disc = mps_truncate(MPSState(tuple(t / scale for t in bnd), "open"), chi)
            bnd = [t * scale for t in st.tensors]
            report.discarded.append(max(float(disc), 0.0))
        else:
            report.discarded.append(0.0)
    acc = np.ones((1,), dtype=complex)
    for m in bnd:
        acc = acc @ m[:, :, 0]
    report.value = complex(acc[0])
    return report.value, report


def peps_norm_squared(p: PEPSState, chi: int | None = None) -> float:
    if chi is None:
        return peps_exact_contract(p).real
    return peps_boundary_contract(p, chi)[0].real


def peps_product_values(p: PEPSState, ops: Sequence[ProductOperator], chi: int | None = None) -> np.ndarray:
    """Unnormalized values of product operators (exact if ``chi`` is None)."""
    out = []
    for op in ops:
        f = {s: m for s, m in op.factors.items()}
        if chi is None:
            v = peps_exact_contract(p, f)
        else:
            v = peps_boundary_contract(p, chi, f)[0]
        out.append(op.coeff * v)
    return np.array(out, dtype=complex)


def rage_peps_reduced_density(backbone: PEPSState, phases, rotations, support, chi: int | None = None,
                              normalize: bool = True) -> np.ndarray:
    """Reduced density matrix of a phase-dressed PEPS on two sites.

    Each element is a doubled-grid contraction with the dressed matrix
    unit inserted; ``chi=None`` uses exact contraction.
    """
    from .rage import RageState, rage_reduced_density

    if len(support) != 2:
        raise ValueError("support must contain exactly two sites")
    r = RageState(backbone, phases, rotations)
    return rage_reduced_density(r, support, normalize,
                                evaluator=lambda ops: peps_product_values(backbone, ops, chi))
