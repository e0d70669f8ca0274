"""Pauli-string operators and the model Hamiltonians used in the benchmarks.

Sites are numbered from 0. Two-dimensional lattices use row-major
numbering ``site = y * lx + x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .tensor_core import make_rng

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ProductOperator:
    """``coeff`` times a tensor product of single-site matrices.

    ``factors`` maps a site to its ``q x q`` matrix (rows = output index);
    absent sites carry the identity.
    """

    coeff: complex
    factors: Mapping[int, np.ndarray]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.factors))

    def scaled(self, c) -> "ProductOperator":
        return ProductOperator(self.coeff * c, self.factors)

    def __matmul__(self, other: "ProductOperator") -> "ProductOperator":
        out = dict(self.factors)
        for k, m in other.factors.items():
            out[k] = out[k] @ m if k in out else m
        return ProductOperator(self.coeff * other.coeff, out)


@dataclass(frozen=True)
class PauliString:
    """A weighted tensor product of Pauli letters on ``n_sites`` qubits."""

    letters: str
    coeff: complex = 1.0

    def __post_init__(self):
        if any(c not in PAULI for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if not np.isfinite(self.coeff):
            raise ValueError("coefficient must be finite")

    @classmethod
    def from_sites(cls, n_sites: int, ops: Mapping[int, str], coeff=1.0) -> "PauliString":
        letters = ["I"] * n_sites
        for site, letter in ops.items():
            if not 0 <= site < n_sites:
                raise IndexError(f"site {site} out of range")
            letters[site] = letter
        return cls("".join(letters), coeff)

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    @property
    def local_dim(self) -> int:
        return 2

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    def product_terms(self) -> list[ProductOperator]:
        return [ProductOperator(complex(self.coeff), {i: PAULI[self.letters[i]] for i in self.support})]

    def matrix(self) -> np.ndarray:
        """Dense matrix on the support sites (ascending order)."""
        out = np.array([[complex(self.coeff)]])
        for i in self.support:
            out = np.kron(out, PAULI[self.letters[i]])
        return out


@dataclass(frozen=True)
class LocalOperator:
    """Arbitrary operator on a few sites of a qudit register.

    ``matrix`` acts on the listed ``sites`` with the first site as the most
    significant digit.
    """

    n_sites: int
    sites: tuple[int, ...]
    matrix: np.ndarray
    local_dim: int = 2

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.sites)

    def product_terms(self) -> list[ProductOperator]:
        """Expand into products of single-site operators.

        Two-site operators use an operator Schmidt decomposition; larger
        supports fall back to matrix units.
        """
        q = self.local_dim
        k = len(self.sites)
        m = np.asarray(self.matrix, dtype=complex)
        if k == 1:
            return [ProductOperator(1.0, {self.sites[0]: m})]
        if k == 2:
            t = m.reshape(q, q, q, q).transpose(0, 2, 1, 3).reshape(q * q, q * q)
            u, s, vh = np.linalg.svd(t)
            out = []
            for i in range(len(s)):
                if s[i] <= 1e-14 * max(s[0], 1e-300):
                    break
                a = u[:, i].reshape(q, q)
                b = vh[i, :].reshape(q, q)
                out.append(ProductOperator(s[i], {self.sites[0]: a, self.sites[1]: b}))
            return out
        t = m.reshape((q,) * (2 * k))
        out = []
        for idx in zip(*np.nonzero(np.abs(t) > 0)):
            factors = {}
            for pos, site in enumerate(self.sites):
                e = np.zeros((q, q), dtype=complex)
                e[idx[pos], idx[k + pos]] = 1.0
                factors[site] = e
            out.append(ProductOperator(t[idx], factors))
        return out


@dataclass
class HamiltonianSum:
    """Sum of local terms with optional lattice metadata."""

    n_sites: int
    terms: list = field(default_factory=list)
    local_dim: int = 2
    lattice: dict = field(default_factory=dict)

    def __post_init__(self):
        for t in self.terms:
            if isinstance(t, PauliString) and t.n_sites != self.n_sites:
                raise ValueError("term site count does not match the Hamiltonian")

    def __add__(self, other: "HamiltonianSum") -> "HamiltonianSum":
        if other.n_sites != self.n_sites or other.local_dim != self.local_dim:
            raise ValueError("incompatible Hamiltonians")
        return HamiltonianSum(self.n_sites, list(self.terms) + list(other.terms), self.local_dim, dict(self.lattice))

    def __len__(self):
        return len(self.terms)

    def product_terms(self) -> list[ProductOperator]:
        out = []
        for t in self.terms:
            out.extend(t.product_terms())
        return out

    def max_support(self) -> int:
        return max((len(t.support) for t in self.terms), default=0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        merged: dict = {}
        for t in self.terms:
            if isinstance(t, PauliString):
                merged[t.letters] = merged.get(t.letters, 0) + complex(t.coeff)
            else:
                m = np.asarray(t.matrix)
                if not np.allclose(m, m.conj().T, atol=tol):
                    return False
        return all(abs(c.imag) <= tol for c in merged.values())

    def coupling_weights(self) -> np.ndarray:
        """Symmetric matrix of summed |coefficient| over two-site terms."""
        w = np.zeros((self.n_sites, self.n_sites))
        for t in self.terms:
            sup = t.support
            if len(sup) == 2:
                c = abs(t.coeff) if isinstance(t, PauliString) else np.linalg.norm(t.matrix)
                w[sup[0], sup[1]] += c
                w[sup[1], sup[0]] += c
        return w


def pauli_sum(n_sites: int, spec: Iterable[tuple[Mapping[int, str], complex]], **lattice) -> HamiltonianSum:
    return HamiltonianSum(n_sites, [PauliString.from_sites(n_sites, ops, c) for ops, c in spec], 2, dict(lattice))


def lattice_edges(lx: int, ly: int, periodic: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds of an ``lx x ly`` square lattice.

    Under periodic wrapping a dimension of length 2 would produce the same
    bond twice; duplicates are dropped.
    """
    edges = []
    seen = set()
    for y in range(ly):
        for x in range(lx):
            a = y * lx + x
            for dx, dy in ((1, 0), (0, 1)):
                nx, ny = x + dx, y + dy
                if periodic:
                    nx, ny = nx % lx, ny % ly
                elif nx >= lx or ny >= ly:
                    continue
                b = ny * lx + nx
                key = (min(a, b), max(a, b))
                if a == b or key in seen:
                    continue
                seen.add(key)
                edges.append(key)
    return edges


def ising_2d(lx: int, ly: int, j: float = 1.0, b: float = 1.0, periodic: bool = False) -> HamiltonianSum:
    """Transverse-field Ising model ``J sum ZZ + B sum X``."""
    n = lx * ly
    spec = [({a: "Z", c: "Z"}, j) for a, c in lattice_edges(lx, ly, periodic)]
    spec += [({i: "X"}, b) for i in range(n)]
    return pauli_sum(n, spec, model="ising_2d", lx=lx, ly=ly, periodic=periodic)


def heisenberg_2d(lx: int, ly: int, periodic: bool = False, j: float = 1.0) -> HamiltonianSum:
    """Nearest-neighbour ``XX + YY + ZZ`` couplings."""
    n = lx * ly
    spec = [({a: p, c: p}, j) for a, c in lattice_edges(lx, ly, periodic) for p in "XYZ"]
    return pauli_sum(n, spec, model="heisenberg_2d", lx=lx, ly=ly, periodic=periodic)


def spin_glass_2d(lx: int, ly: int, seed=0, mean: float = 1.0, sigma: float = 0.1) -> HamiltonianSum:
    """Heisenberg couplings drawn from a normal distribution, open boundary."""
    rng = make_rng(seed)
    n = lx * ly
    spec = []
    for a, c in lattice_edges(lx, ly, False):
        jc = float(rng.normal(mean, sigma))
        spec += [({a: p, c: p}, jc) for p in "XYZ"]
    return pauli_sum(n, spec, model="spin_glass_2d", lx=lx, ly=ly, periodic=False)


def long_range_ising(n: int, b: float = 1.0) -> HamiltonianSum:
    """``sum_{i<j} Z_i Z_j / |i - j| + b sum X``, each unordered pair once."""
    spec = [({i: "Z", k: "Z"}, 1.0 / (k - i)) for i in range(n) for k in range(i + 1, n)]
    spec += [({i: "X"}, b) for i in range(n)]
    return pauli_sum(n, spec, model="long_range_ising")


def _neighbours(edges, n):
    nb = [set() for _ in range(n)]
    for a, c in edges:
        if a == c:
            raise ValueError("self-loops are not allowed")
        nb[a].add(c)
        nb[c].add(a)
    return nb


def stabilizer_strings(edges, n_sites: int) -> list[PauliString]:
    """Graph-state stabilizers ``K_a = X_a prod_{b ~ a} Z_b``."""
    nb = _neighbours(edges, n_sites)
    out = []
    for a in range(n_sites):
        ops = {b: "Z" for b in nb[a]}
        ops[a] = "X"
        out.append(PauliString.from_sites(n_sites, ops))
    return out


def graph_hamiltonian(edges, n_sites: int | None = None) -> HamiltonianSum:
    """``-sum_a K_a``; its unique ground state is the graph state."""
    edges = [tuple(e) for e in edges]
    if n_sites is None:
        n_sites = 1 + max((max(e) for e in edges), default=0)
    terms = [PauliString(k.letters, -1.0) for k in stabilizer_strings(edges, n_sites)]
    return HamiltonianSum(n_sites, terms, 2, {"model": "graph", "edges": edges})


def disturbed_graph_hamiltonian(edges, fields, n_sites: int | None = None, axis: str = "Z") -> HamiltonianSum:
    """Graph Hamiltonian plus single-site fields ``sum_i h_i sigma_i``."""
    fields = np.asarray(fields, dtype=float)
    h = graph_hamiltonian(edges, n_sites if n_sites is not None else len(fields))
    if len(fields) != h.n_sites:
        raise ValueError("one field value per site required")
    axis = axis.upper()
    terms = [PauliString.from_sites(h.n_sites, {i: axis}, f) for i, f in enumerate(fields) if f != 0]
    return HamiltonianSum(h.n_sites, h.terms + terms, 2, {**h.lattice, "model": "disturbed_graph"})


# ---------------------------------------------------------------- toric code

def toric_edge_index(lx: int, ly: int, x: int, y: int, direction: str) -> int:
    """Qubit index of the edge leaving vertex (x, y) to the right ('h') or up ('v')."""
    x %= lx
    y %= ly
    base = 0 if direction == "h" else lx * ly
    return base + y * lx + x


def toric_plaquettes(lx: int, ly: int) -> list[tuple[int, ...]]:
    out = []
    for y in range(ly):
        for x in range(lx):
            out.append((
                toric_edge_index(lx, ly, x, y, "h"),
                toric_edge_index(lx, ly, x, y + 1, "h"),
                toric_edge_index(lx, ly, x, y, "v"),
                toric_edge_index(lx, ly, x + 1, y, "v"),
            ))
    return out


def toric_crosses(lx: int, ly: int) -> list[tuple[int, ...]]:
    """Edges around each vertex, in lexicographic vertex order (x, y)."""
    out = []
    for x in range(lx):
        for y in range(ly):
            out.append((
                toric_edge_index(lx, ly, x, y, "h"),
                toric_edge_index(lx, ly, x - 1, y, "h"),
                toric_edge_index(lx, ly, x, y, "v"),
                toric_edge_index(lx, ly, x, y - 1, "v"),
            ))
    return out


def toric_code_hamiltonian(lx: int = 2, ly: int = 3, j: float = 1.0) -> HamiltonianSum:
    """Loop (XXXX) and cross (ZZZZ) terms on a periodic vertex lattice.

    The cross at the lexicographically last vertex is dependent on the
    others and is left out.
    """
    n = 2 * lx * ly
    spec = [({e: "X" for e in p}, -j) for p in toric_plaquettes(lx, ly)]
    spec += [({e: "Z" for e in c}, -j) for c in toric_crosses(lx, ly)[:-1]]
    return pauli_sum(n, spec, model="toric_code", lx=lx, ly=ly, periodic=True)


def kitaev_perturbed(lx: int = 2, ly: int = 3, j: float = 1.0, b: float = 0.0, axis: str = "Z") -> HamiltonianSum:
    """Graph form of the toric code plus a uniform field.

    The toric-code stabilizer group is completed to full rank and mapped to
    a graph by local Cliffords; the result is ``-J sum_a K_a + B sum_i
    sigma_i`` with ``sigma`` along ``axis`` in the graph frame.
    """
    from .wgs import stabilizer_to_graph, toric_code_stabilizers

    edges, _ = stabilizer_to_graph(toric_code_stabilizers(lx, ly))
    n = 2 * lx * ly
    h = graph_hamiltonian(edges, n)
    terms = [PauliString(t.letters, -j) for t in h.terms]
    if b != 0:
        terms += [PauliString.from_sites(n, {i: axis.upper()}, b) for i in range(n)]
    return HamiltonianSum(n, terms, 2, {"model": "kitaev_perturbed", "lx": lx, "ly": ly, "edges": edges, "b": b})


def random_pauli_sum(n_sites: int, n_terms: int, max_support: int, seed=0) -> HamiltonianSum:
    """Random Hermitian Pauli sum, used by the oracle tests."""
    rng = make_rng(seed)
    spec = []
    for _ in range(n_terms):
        k = int(rng.integers(1, min(max_support, n_sites) + 1))
        sites = rng.choice(n_sites, size=k, replace=False)
        ops = {int(s): "XYZ"[int(rng.integers(3))] for s in sites}
        spec.append((ops, float(rng.normal())))
    return pauli_sum(n_sites, spec)


def random_local_hamiltonian(n_sites: int, n_terms: int, local_dim: int, seed=0) -> HamiltonianSum:
    """Random Hermitian one- and two-site qudit terms."""
    rng = make_rng(seed)
    terms = []
    for _ in range(n_terms):
        k = int(rng.integers(1, 3))
        sites = tuple(sorted(int(s) for s in rng.choice(n_sites, size=k, replace=False)))
        d = local_dim ** k
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        terms.append(LocalOperator(n_sites, sites, 0.5 * (m + m.conj().T), local_dim))
    return HamiltonianSum(n_sites, terms, local_dim)

