"""Weighted graph states: adjacency phases, local rotations and stabilizers.

Phase convention: for a pair of sites ``a < b`` the gate multiplies the
basis state ``|s_a, s_b>`` by ``exp(i phi_ab[s_a, s_b])``, and the product
runs once over unordered pairs. For qubits only ``phi_ab[1, 1]`` is free,
so a graph-state edge carries the angle pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hamiltonians import PauliString, stabilizer_strings, toric_crosses, toric_plaquettes
from .tensor_core import make_rng

TWO_PI = 2 * np.pi


# ------------------------------------------------------------ phase tables

@dataclass(frozen=True)
class AdjacencyPhases:
    """Pairwise phase table ``table[a, b, s, t]`` of shape ``(n, n, q, q)``.

    Invariants: ``table[a, b, s, t] == table[b, a, t, s]``, the diagonal
    blocks vanish, and rows/columns with a zero local index vanish.
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.mod(np.asarray(self.table, dtype=float), TWO_PI)
        t[np.isclose(t, TWO_PI, rtol=0, atol=1e-15)] = 0.0
        if t.ndim != 4 or t.shape[0] != t.shape[1] or t.shape[2] != t.shape[3]:
            raise ValueError("phase table must have shape (n, n, q, q)")
        n = t.shape[0]
        if np.any(t[np.arange(n), np.arange(n)] != 0):
            raise ValueError("self-phases are not allowed")
        diff = np.abs(t - t.transpose(1, 0, 3, 2))
        diff = np.minimum(diff, TWO_PI - diff)
        if np.any(diff > 1e-12):
            raise ValueError("phase table must satisfy table[a, b, s, t] == table[b, a, t, s]")
        if np.any(t[:, :, 0, :] != 0) or np.any(t[:, :, :, 0] != 0):
            raise ValueError("phases involving the zero local state must vanish")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def zeros(cls, n: int, q: int = 2) -> "AdjacencyPhases":
        return cls(np.zeros((n, n, q, q)))

    @classmethod
    def from_matrix(cls, phi) -> "AdjacencyPhases":
        """Qubit phases from a symmetric ``n x n`` angle matrix."""
        phi = np.asarray(phi, dtype=float)
        if not np.allclose(phi, phi.T, atol=1e-14):
            raise ValueError("phase matrix must be symmetric")
        if np.any(np.diag(phi) != 0):
            raise ValueError("phase matrix must have zero diagonal")
        n = phi.shape[0]
        t = np.zeros((n, n, 2, 2))
        t[:, :, 1, 1] = phi
        return cls(t)

    @classmethod
    def random(cls, n: int, q: int = 2, seed=0, density: float = 1.0) -> "AdjacencyPhases":
        """Angles uniform on [0, 2 pi) for a random subset of pairs."""
        rng = make_rng(seed)
        t = np.zeros((n, n, q, q))
        for a in range(n):
            for b in range(a + 1, n):
                if rng.uniform() < density:
                    blk = rng.uniform(0, TWO_PI, size=(q - 1, q - 1))
                    t[a, b, 1:, 1:] = blk
                    t[b, a, 1:, 1:] = blk.T
        return cls(t)

    @property
    def n_sites(self) -> int:
        return self.table.shape[0]

    @property
    def local_dim(self) -> int:
        return self.table.shape[2]

    @property
    def matrix(self) -> np.ndarray:
        """Qubit angle matrix ``phi_ab = table[a, b, 1, 1]``."""
        if self.local_dim != 2:
            raise ValueError("matrix view only exists for qubits")
        return np.array(self.table[:, :, 1, 1])

    def get(self, a: int, b: int) -> float:
        return float(self.table[a, b, 1, 1])

    def with_angle(self, a: int, b: int, angle: float) -> "AdjacencyPhases":
        """Qubit phases with ``phi_ab`` replaced."""
        if a == b:
            raise ValueError("self-phases are not allowed")
        t = np.array(self.table)
        t[a, b, 1, 1] = angle
        t[b, a, 1, 1] = angle
        return AdjacencyPhases(t)

    def shifted(self, a: int, b: int, delta: float) -> "AdjacencyPhases":
        return self.with_angle(a, b, self.get(a, b) + delta)

    def total_phase(self, config: Sequence[int]) -> float:
        """``sum_{a<b} phi_ab[s_a, s_b]`` for one basis configuration."""
        n = self.n_sites
        return float(sum(self.table[a, b, config[a], config[b]] for a in range(n) for b in range(a + 1, n)))

    def pairs(self) -> list[tuple[int, int]]:
        n = self.n_sites
        return [(a, b) for a in range(n) for b in range(a + 1, n)]


def graph_state_phases(edges: Iterable[tuple[int, int]], n_sites: int) -> AdjacencyPhases:
    """Angle pi on every edge of a simple graph."""
    phi = np.zeros((n_sites, n_sites))
    for a, b in edges:
        if a == b:
            raise ValueError("self-loops are not allowed")
        phi[a, b] = phi[b, a] = np.pi
    return AdjacencyPhases.from_matrix(phi)


def stabilizer_operators(edges, n_sites: int) -> list[PauliString]:
    """``K_a = X_a prod_{b in N(a)} Z_b`` for each vertex."""
    return stabilizer_strings(edges, n_sites)


# ------------------------------------------------------------- rotations

_SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
# V = x0 * 1 + i (x1 X - x2 Y + x3 Z) = sum_mu x_mu ROTATION_BASIS[mu]
ROTATION_BASIS = (_SIGMA[0], 1j * _SIGMA[1], -1j * _SIGMA[2], 1j * _SIGMA[3])


def rotation_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return sum(x[k] * ROTATION_BASIS[k] for k in range(4))


def rotation_from_unitary(u) -> np.ndarray:
    """Unit vector ``x`` with ``V(x)`` equal to ``u`` up to a global phase."""
    u = np.asarray(u, dtype=complex)
    v = u / np.sqrt(np.linalg.det(u))
    x = np.array([
        np.trace(v).real / 2,
        (np.trace(v @ _SIGMA[1]) / 2j).real,
        -(np.trace(v @ _SIGMA[2]) / 2j).real,
        (np.trace(v @ _SIGMA[3]) / 2j).real,
    ])
    return x / np.linalg.norm(x)


@dataclass(frozen=True)
class LocalRotations:
    """One unit vector ``x`` in R^4 per qubit."""

    params: np.ndarray

    def __post_init__(self):
        p = np.array(self.params, dtype=float)
        if p.ndim != 2 or p.shape[1] != 4:
            raise ValueError("rotation parameters must have shape (n, 4)")
        if np.any(np.abs(np.linalg.norm(p, axis=1) - 1) > 1e-10):
            raise ValueError("each rotation vector must have unit norm")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    @classmethod
    def identity(cls, n: int) -> "LocalRotations":
        p = np.zeros((n, 4))
        p[:, 0] = 1
        return cls(p)

    @classmethod
    def random(cls, n: int, seed=0) -> "LocalRotations":
        rng = make_rng(seed)
        p = rng.normal(size=(n, 4))
        return cls(p / np.linalg.norm(p, axis=1, keepdims=True))

    @classmethod
    def from_unitaries(cls, us) -> "LocalRotations":
        return cls(np.array([rotation_from_unitary(u) for u in us]))

    @property
    def n_sites(self) -> int:
        return self.params.shape[0]

    def matrix(self, k: int) -> np.ndarray:
        return rotation_matrix(self.params[k])

    def matrices(self) -> list[np.ndarray]:
        return [self.matrix(k) for k in range(self.n_sites)]

    def with_param(self, k: int, x) -> "LocalRotations":
        p = np.array(self.params)
        x = np.asarray(x, dtype=float)
        p[k] = x / np.linalg.norm(x)
        return LocalRotations(p)

    def is_identity(self, k: int) -> bool:
        x = self.params[k]
        return abs(abs(x[0]) - 1) < 1e-15


# ---------------------------------------------------------- Pauli algebra

@dataclass(frozen=True)
class Pauli:
    """``i^phase * prod_q X_q^{x_q} Z_q^{z_q}`` (X before Z on every qubit)."""

    x: tuple
    z: tuple
    phase: int = 0

    @classmethod
    def from_label(cls, label: str) -> "Pauli":
        sign = 0
        if label[0] in "+-":
            sign = 2 if label[0] == "-" else 0
            label = label[1:]
        x = tuple(int(c in "XY") for c in label)
        z = tuple(int(c in "ZY") for c in label)
        ny = sum(c == "Y" for c in label)
        return cls(x, z, (sign + ny) % 4)

    @classmethod
    def from_string(cls, p: PauliString) -> "Pauli":
        c = complex(p.coeff)
        if abs(abs(c) - 1) > 1e-12 or abs(c.imag) > 1e-12:
            raise ValueError("coefficient must be +1 or -1")
        return cls.from_label(("-" if c.real < 0 else "+") + p.letters)

    @property
    def n(self) -> int:
        return len(self.x)

    def __mul__(self, other: "Pauli") -> "Pauli":
        cross = sum(a & b for a, b in zip(self.z, other.x))
        x = tuple(a ^ b for a, b in zip(self.x, other.x))
        z = tuple(a ^ b for a, b in zip(self.z, other.z))
        return Pauli(x, z, (self.phase + other.phase + 2 * cross) % 4)

    def commutes(self, other: "Pauli") -> bool:
        s = sum(a & b for a, b in zip(self.x, other.z)) + sum(a & b for a, b in zip(self.z, other.x))
        return s % 2 == 0

    def label(self) -> str:
        """Signed letter string; raises if the operator is not Hermitian."""
        ny = sum(a & b for a, b in zip(self.x, self.z))
        s = (self.phase - ny) % 4
        if s % 2:
            raise ValueError("Pauli operator is not Hermitian")
        letters = "".join("IXZY"[a + 2 * b] for a, b in zip(self.x, self.z))
        return ("-" if s == 2 else "+") + letters

    def sign(self) -> int:
        return -1 if self.label()[0] == "-" else 1

    def to_string(self) -> PauliString:
        lab = self.label()
        return PauliString(lab[1:], -1.0 if lab[0] == "-" else 1.0)

    def matrix(self) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for a, b in zip(self.x, self.z):
            m = np.eye(2, dtype=complex)
            if a:
                m = m @ _SIGMA[1]
            if b:
                m = m @ _SIGMA[3]
            out = np.kron(out, m)
        return (1j ** self.phase) * out


def _single(n, q, letter):
    lab = ["I"] * n
    lab[q] = letter
    return Pauli.from_label("".join(lab))


# images of X and Z under P -> g P g^dagger, with signs, for one-qubit gates
_ONE_QUBIT_IMAGES = {
    "I": ("+X", "+Z"),
    "H": ("+Z", "+X"),
    "S": ("+Y", "+Z"),
    "SDG": ("-Y", "+Z"),
    "X": ("+X", "-Z"),
    "Y": ("-X", "-Z"),
    "Z": ("-X", "+Z"),
}
_INVERSE = {"S": "SDG", "SDG": "S"}


def _image(n, gate, sites, which, q):
    """Image of ``X_q`` (which=0) or ``Z_q`` (which=1) under the gate."""
    if gate in _ONE_QUBIT_IMAGES:
        if q != sites[0]:
            return _single(n, q, "XZ"[which])
        lab = _ONE_QUBIT_IMAGES[gate][which]
        p = _single(n, q, lab[1])
        return p if lab[0] == "+" else Pauli(p.x, p.z, (p.phase + 2) % 4)
    a, b = sites
    if gate == "CZ":
        if which == 1 or q not in (a, b):
            return _single(n, q, "XZ"[which])
        other = b if q == a else a
        return _single(n, q, "X") * _single(n, other, "Z")
    if gate == "CNOT":
        c, t = a, b
        if which == 0 and q == c:
            return _single(n, c, "X") * _single(n, t, "X")
        if which == 1 and q == t:
            return _single(n, c, "Z") * _single(n, t, "Z")
        return _single(n, q, "XZ"[which])
    raise ValueError(f"unsupported Clifford gate {gate!r}")


def conjugate_pauli(p: Pauli, gate: str, sites: Sequence[int], dagger_first: bool = False) -> Pauli:
    """``g P g^dagger`` (or ``g^dagger P g`` if ``dagger_first``) for a Clifford gate."""
    gate = gate.upper()
    if dagger_first:
        gate = _INVERSE.get(gate, gate)
    n = p.n
    out = Pauli((0,) * n, (0,) * n, p.phase)
    for q in range(n):
        if p.x[q]:
            out = out * _image(n, gate, sites, 0, q)
        if p.z[q]:
            out = out * _image(n, gate, sites, 1, q)
    return out


# -------------------------------------------------------------- GF(2) tools

def gf2_rank(rows) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    if m.size == 0:
        return 0
    m = m.copy()
    r = 0
    for c in range(m.shape[1]):
        piv = np.nonzero(m[r:, c])[0]
        if len(piv) == 0:
            continue
        p = r + piv[0]
        m[[r, p]] = m[[p, r]]
        for i in range(m.shape[0]):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        r += 1
        if r == m.shape[0]:
            break
    return r


def gf2_nullspace(a) -> list[np.ndarray]:
    """Basis of ``{v : a v = 0 mod 2}``."""
    m = np.array(a, dtype=np.uint8) % 2
    rows, cols = m.shape
    m = m.copy()
    pivots = []
    r = 0
    for c in range(cols):
        piv = np.nonzero(m[r:, c])[0] if r < rows else []
        if len(piv) == 0:
            continue
        p = r + piv[0]
        m[[r, p]] = m[[p, r]]
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for i, pc in enumerate(pivots):
            v[pc] = m[i, f]
        basis.append(v)
    return basis


# ------------------------------------------------------------- stabilizers

@dataclass(frozen=True)
class StabilizerGroup:
    """Generators as signed Pauli operators (binary symplectic rows + sign)."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(g if isinstance(g, Pauli) else Pauli.from_label(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("empty stabilizer group")
        n = gens[0].n
        for g in gens:
            if g.n != n:
                raise ValueError("generators act on different qubit counts")
            g.label()  # Hermitian with sign +-1
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if not gens[i].commutes(gens[j]):
                    raise ValueError(f"generators {i} and {j} anticommute")
        if gf2_rank(self.symplectic()) != len(gens):
            raise ValueError("generators are not independent")

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "StabilizerGroup":
        return cls(tuple(Pauli.from_label(s) for s in labels))

    @property
    def n_qubits(self) -> int:
        return self.generators[0].n

    def symplectic(self) -> np.ndarray:
        return np.array([list(g.x) + list(g.z) for g in self.generators], dtype=np.uint8)

    def signs(self) -> np.ndarray:
        return np.array([0 if g.sign() > 0 else 1 for g in self.generators], dtype=np.uint8)

    def rank(self) -> int:
        return len(self.generators)

    def strings(self) -> list[PauliString]:
        return [g.to_string() for g in self.generators]


def graph_stabilizer_group(edges, n_sites: int) -> StabilizerGroup:
    return StabilizerGroup(tuple(Pauli.from_string(k) for k in stabilizer_operators(edges, n_sites)))


_CLIFFORD_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": _SIGMA[1],
    "Y": _SIGMA[2],
    "Z": _SIGMA[3],
}


def local_clifford_matrix(sequence: Sequence[str]) -> np.ndarray:
    """Unitary of a gate sequence applied left to right in time."""
    u = np.eye(2, dtype=complex)
    for g in sequence:
        u = _CLIFFORD_MATRICES[g.upper()] @ u
    return u


def _swap_rows(rows, i, j):
    rows[i], rows[j] = rows[j], rows[i]


def stabilizer_to_graph(s: StabilizerGroup):
    """Local-Clifford reduction of a full-rank stabilizer group to a graph.

    Returns ``(edges, corrections)``; ``corrections[k]`` is a tuple of gate
    names to apply to qubit ``k`` of the graph state, in time order, so
    that the result is the +1 eigenstate of every generator of ``s``.
    """
    n = s.n_qubits
    if s.rank() != n:
        raise ValueError(f"stabilizer group has rank {s.rank()} < {n}; complete it to full rank first")
    rows = list(s.generators)

    # row-reduce the X block
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, n) if rows[i].x[c]), None)
        if piv is None:
            continue
        _swap_rows(rows, r, piv)
        for i in range(n):
            if i != r and rows[i].x[c]:
                rows[i] = rows[i] * rows[r]
        r += 1
    # rows r.. are Z-only; their pivot columns get a Hadamard
    hcols = []
    rr = r
    for c in range(n):
        piv = next((i for i in range(rr, n) if rows[i].z[c]), None)
        if piv is None:
            continue
        _swap_rows(rows, rr, piv)
        for i in range(r, n):
            if i != rr and rows[i].z[c]:
                rows[i] = rows[i] * rows[rr]
        hcols.append(c)
        rr += 1
    for c in hcols:
        rows = [conjugate_pauli(p, "H", (c,)) for p in rows]

    # invert the (now full-rank) X block
    for c in range(n):
        piv = next((i for i in range(c, n) if rows[i].x[c]), None)
        if piv is None:
            raise RuntimeError("X block is singular after Hadamards")
        _swap_rows(rows, c, piv)
        for i in range(n):
            if i != c and rows[i].x[c]:
                rows[i] = rows[i] * rows[c]

    scols = [a for a in range(n) if rows[a].z[a]]
    for a in scols:
        rows = [conjugate_pauli(p, "SDG", (a,)) for p in rows]
    zcols = [a for a in range(n) if rows[a].sign() < 0]
    for a in zcols:
        rows = [conjugate_pauli(p, "Z", (a,)) for p in rows]

    gamma = np.array([r_.z for r_ in rows], dtype=np.uint8)
    if np.any(gamma != gamma.T) or np.any(np.diag(gamma)):
        raise RuntimeError("reduction did not produce a graph")
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if gamma[a, b]]
    corrections = []
    for k in range(n):
        seq = []
        if k in zcols:
            seq.append("Z")
        if k in scols:
            seq.append("S")
        if k in hcols:
            seq.append("H")
        corrections.append(tuple(seq))
    return edges, corrections


def toric_code_stabilizers(lx: int = 2, ly: int = 3) -> StabilizerGroup:
    """Independent toric-code generators completed to full rank.

    One plaquette and the cross at the lexicographically last vertex are
    dependent and dropped; Z-type loop operators that commute with all
    generators are appended until there are as many generators as qubits.
    """
    n = 2 * lx * ly
    plaq = toric_plaquettes(lx, ly)[:-1]
    cross = toric_crosses(lx, ly)[:-1]

    def vec(edges_):
        v = np.zeros(n, dtype=np.uint8)
        v[list(edges_)] = 1
        return v

    xrows = [vec(p) for p in plaq]
    zrows = [vec(c) for c in cross]
    logicals = []
    for v in gf2_nullspace(np.array(xrows)):
        if gf2_rank(zrows + logicals + [v]) > len(zrows) + len(logicals):
            logicals.append(v)
        if len(xrows) + len(zrows) + len(logicals) == n:
            break
    gens = []
    for v in xrows:
        gens.append(Pauli(tuple(int(b) for b in v), (0,) * n, 0))
    for v in zrows + logicals:
        gens.append(Pauli((0,) * n, tuple(int(b) for b in v), 0))
    return StabilizerGroup(tuple(gens))
