"""Tree tensor states.

A tree topology is a set of tensor vertices joined by bond edges without
loops. Each vertex may also carry zero, one or two physical indices. The
legs of a vertex tensor are ordered as its neighbours (in topology order)
followed by its physical sites.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonians import HamiltonianSum, ProductOperator
from .mps import MPSState, SweepResult
from .tensor_core import (
    DegenerateMetricError,
    as_tensor,
    make_rng,
    qr_reduce,
    random_complex,
    solve_generalized_eig_min,
)


@dataclass(frozen=True)
class TreeTopology:
    neighbors: tuple
    sites: tuple
    bond_dims: tuple  # ((u, v, dim), ...) with u < v
    local_dim: int = 2
    root: int = 0

    def __post_init__(self):
        nv = len(self.neighbors)
        if nv == 0 or len(self.sites) != nv:
            raise ValueError("need one site list per vertex")
        edges = set()
        for u, nb in enumerate(self.neighbors):
            for v in nb:
                if u == v or u not in self.neighbors[v]:
                    raise ValueError(f"neighbour lists inconsistent at edge ({u}, {v})")
                edges.add((min(u, v), max(u, v)))
        if len(edges) != nv - 1:
            raise ValueError("a tree on V vertices has V - 1 edges")
        seen = {self.root}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != nv:
            raise ValueError("topology is not connected")
        all_sites = sorted(s for ss in self.sites for s in ss)
        if all_sites != list(range(len(all_sites))):
            raise ValueError("each physical site must be attached exactly once")
        for u in range(nv):
            if nv > 1 and len(self.neighbors[u]) + len(self.sites[u]) < 2:
                raise ValueError(f"vertex {u} has degree < 2")
        if {(a, b) for a, b, _ in self.bond_dims} != edges:
            raise ValueError("bond dimensions must be given for every edge")

    @property
    def n_vertices(self) -> int:
        return len(self.neighbors)

    @property
    def n_sites(self) -> int:
        return sum(len(s) for s in self.sites)

    def bond(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        for a, b, d in self.bond_dims:
            if (a, b) == key:
                return d
        raise KeyError(key)

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b, _ in self.bond_dims]

    def leg_shape(self, v: int) -> tuple[int, ...]:
        return tuple(self.bond(v, c) for c in self.neighbors[v]) + (self.local_dim,) * len(self.sites[v])

    def with_bond_dims(self, dims: dict) -> "TreeTopology":
        bd = tuple((a, b, int(dims.get((a, b), d))) for a, b, d in self.bond_dims)
        return TreeTopology(self.neighbors, self.sites, bd, self.local_dim, self.root)

    def side(self, u: int, v: int) -> frozenset:
        """Vertices reachable from ``u`` without crossing the edge to ``v``."""
        return _side(self.neighbors, u, v)

    def parents(self, root: int | None = None) -> dict:
        root = self.root if root is None else root
        par = {root: None}
        order = [root]
        for u in order:
            for v in self.neighbors[u]:
                if v not in par:
                    par[v] = u
                    order.append(v)
        return par

    def dfs_order(self, root: int | None = None) -> list[int]:
        root = self.root if root is None else root
        out = []
        stack = [(root, None)]
        while stack:
            u, p = stack.pop()
            out.append(u)
            for v in reversed(self.neighbors[u]):
                if v != p:
                    stack.append((v, u))
        return out

    def path(self, a: int, b: int) -> list[int]:
        par = self.parents(a)
        out = [b]
        while out[-1] != a:
            out.append(par[out[-1]])
        return out[::-1]


@functools.lru_cache(maxsize=4096)
def _side(neighbors: tuple, u: int, v: int) -> frozenset:
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y in neighbors[x]:
            if y not in seen and not (x == u and y == v):
                seen.add(y)
                stack.append(y)
    return frozenset(seen)


def _capped(chi, q, inside, total):
    return int(min(chi, q ** inside, q ** (total - inside)))


def _build(neighbors, sites, edges_raw, chi, q, n_sites, root=0):
    nbr = tuple(tuple(x) for x in neighbors)
    topo0 = TreeTopology(nbr, tuple(tuple(s) for s in sites),
                         tuple((a, b, 1) for a, b in edges_raw), q, root)
    dims = []
    for a, b in edges_raw:
        inside = sum(len(sites[x]) for x in topo0.side(a, b))
        dims.append((a, b, _capped(chi, q, inside, n_sites)))
    return TreeTopology(nbr, topo0.sites, tuple(dims), q, root)


def _group_sites(n_sites, groups):
    if groups is None:
        groups = [tuple(range(k, min(k + 2, n_sites))) for k in range(0, n_sites, 2)]
    groups = [tuple(g) for g in groups]
    if sorted(s for g in groups for s in g) != list(range(n_sites)):
        raise ValueError("groups must partition the sites")
    return groups


def subcubic_tree(n_sites: int, chi: int, local_dim: int = 2, groups=None) -> TreeTopology:
    """Balanced tree with internal degree <= 3 and two sites per outer tensor.

    ``groups`` overrides the default consecutive pairing of sites onto the
    outer tensors (see :func:`greedy_site_groups`). Bonds are capped by the
    Hilbert-space dimension on either side.
    """
    if n_sites < 2:
        raise ValueError("need at least two sites")
    groups = _group_sites(n_sites, groups)
    neighbors: list[list[int]] = []
    sites: list[tuple] = []
    edges = []

    def vertex(site_tuple=()):
        neighbors.append([])
        sites.append(tuple(site_tuple))
        return len(neighbors) - 1

    def link(a, b):
        neighbors[a].append(b)
        neighbors[b].append(a)
        edges.append((min(a, b), max(a, b)))

    m = len(groups)
    if m == 1:
        vertex(groups[0])
        return _build(neighbors, sites, edges, chi, local_dim, n_sites)
    if m == 2:
        a = vertex(groups[0])
        b = vertex(groups[1])
        link(a, b)
        return _build(neighbors, sites, edges, chi, local_dim, n_sites)

    def split(seq, k):
        size, extra = divmod(len(seq), k)
        out, start = [], 0
        for i in range(k):
            end = start + size + (1 if i < extra else 0)
            out.append(seq[start:end])
            start = end
        return out

    def subtree(seq):
        if len(seq) == 1:
            return vertex(seq[0])
        v = vertex()
        for part in split(seq, 2):
            link(v, subtree(part))
        return v

    root = vertex()
    for part in split(groups, 3):
        link(root, subtree(part))
    return _build(neighbors, sites, edges, chi, local_dim, n_sites)


def chain_tree(n_sites: int, chi: int = 2, local_dim: int = 2, flat: bool = False) -> TreeTopology:
    """Path topology, the tree form of an open MPS.

    With ``flat=True`` each path vertex instead connects to a separate
    leaf tensor that holds the physical site; the leaf tensors only change
    the local basis.
    """
    if n_sites < 2:
        raise ValueError("need at least two sites")
    n = n_sites
    if not flat:
        nb = [[k - 1] * (k > 0) + [k + 1] * (k < n - 1) for k in range(n)]
        edges = [(k, k + 1) for k in range(n - 1)]
        return _build(nb, [(k,) for k in range(n)], edges, chi, local_dim, n)
    nb = [[k - 1] * (k > 0) + [k + 1] * (k < n - 1) + [n + k] for k in range(n)]
    nb += [[k] for k in range(n)]
    sites = [()] * n + [(k,) for k in range(n)]
    edges = [(k, k + 1) for k in range(n - 1)] + [(k, n + k) for k in range(n)]
    return _build(nb, sites, edges, chi, local_dim, n)


def greedy_site_groups(weights: np.ndarray) -> list[tuple[int, ...]]:
    """Pair sites greedily by descending interaction weight.

    Returns groups ordered so that consecutive groups interact strongly:
    starting from the group of site 0, repeatedly append the unused group
    with the largest total coupling to the previous one.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    cand = sorted(((w[i, j], i, j) for i in range(n) for j in range(i + 1, n)), key=lambda t: (-t[0], t[1], t[2]))
    used = set()
    groups = []
    for wt, i, j in cand:
        if wt <= 0:
            break
        if i not in used and j not in used:
            used |= {i, j}
            groups.append((i, j))
    rest = [i for i in range(n) if i not in used]
    for k in range(0, len(rest), 2):
        groups.append(tuple(rest[k:k + 2]))
    first = next(g for g in groups if 0 in g)
    order = [first]
    left = [g for g in groups if g is not first]
    while left:
        prev = order[-1]
        best = max(left, key=lambda g: (sum(w[a, b] for a in prev for b in g), -min(g)))
        order.append(best)
        left.remove(best)
    return order


# ------------------------------------------------------------------ states

@dataclass(frozen=True)
class TTSState:
    topology: TreeTopology
    tensors: tuple

    def __post_init__(self):
        ts = tuple(as_tensor(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        topo = self.topology
        if len(ts) != topo.n_vertices:
            raise ValueError("one tensor per vertex required")
        for v in range(topo.n_vertices):
            if ts[v].shape != topo.leg_shape(v):
                raise ValueError(f"vertex {v}: shape {ts[v].shape} != {topo.leg_shape(v)}")

    @property
    def n_sites(self) -> int:
        return self.topology.n_sites

    @property
    def local_dim(self) -> int:
        return self.topology.local_dim


def tts_from_tensors(topology: TreeTopology, tensors) -> TTSState:
    """Build a state, adopting the bond dimensions implied by the tensors."""
    dims = {}
    for u, nb in enumerate(topology.neighbors):
        for pos, v in enumerate(nb):
            dims[(min(u, v), max(u, v))] = tensors[u].shape[pos]
    return TTSState(topology.with_bond_dims(dims), tuple(tensors))


def random_tts(topology: TreeTopology, seed=0) -> TTSState:
    """Entries uniform on [-1, 1] + i[-1, 1], normalized."""
    rng = make_rng(seed)
    ts = [random_complex(topology.leg_shape(v), rng) for v in range(topology.n_vertices)]
    t = TTSState(topology, tuple(ts))
    nrm = np.sqrt(tts_norm_squared(t))
    ts[topology.root] = ts[topology.root] / nrm
    return TTSState(topology, tuple(ts))


def tts_from_mps(m: MPSState) -> TTSState:
    """The chain-tree state with the same tensors as an open MPS."""
    if m.boundary != "open":
        raise ValueError("requires an open MPS")
    n = m.n_sites
    topo = chain_tree(n, m.max_bond, m.local_dim)
    ts = []
    for k, a in enumerate(m.tensors):
        if k == 0:
            ts.append(a[0])  # (r, s)
        elif k == n - 1:
            ts.append(a[:, 0, :])  # (l, s)
        else:
            ts.append(a)  # (l, r, s)
    return tts_from_tensors(topo, ts)


# ------------------------------------------------------------ environments

class TTSEnvironments:
    """Cached subtree blocks ``M[bra, ket]`` for each directed edge and operator."""

    def __init__(self, tensors: list, topology: TreeTopology, ops: Sequence[ProductOperator]):
        self.tensors = tensors
        self.topology = topology
        self.ops = list(ops)
        self._msg = [dict() for _ in self.ops]

    def set_topology(self, topology):
        self.topology = topology

    def invalidate(self, w: int):
        topo = self.topology
        for cache in self._msg:
            for key in [k for k in cache if w in topo.side(*k)]:
                del cache[key]

    def _dress(self, i, v, a, skip=None):
        """Apply leg matrices (messages and site factors) to the ket legs of ``a``."""
        topo = self.topology
        f = self.ops[i].factors
        x = a
        nb = topo.neighbors[v]
        for pos, c in enumerate(nb):
            if c == skip:
                continue
            mat = self.message(i, c, v)
            x = np.moveaxis(np.tensordot(x, mat, axes=([pos], [1])), -1, pos)
        for j, s in enumerate(topo.sites[v]):
            op = f.get(s)
            if op is not None:
                pos = len(nb) + j
                x = np.moveaxis(np.tensordot(x, op, axes=([pos], [1])), -1, pos)
        return x

    def message(self, i, u, v):
        cache = self._msg[i]
        key = (u, v)
        if key in cache:
            return cache[key]
        a = self.tensors[u]
        x = self._dress(i, u, a, skip=v)
        pos = self.topology.neighbors[u].index(v)
        others = [k for k in range(a.ndim) if k != pos]
        mat = np.tensordot(a.conj(), x, axes=(others, others))
        cache[key] = mat
        return mat

    def value(self, i, v=None) -> complex:
        v = self.topology.root if v is None else v
        a = self.tensors[v]
        return complex(np.vdot(a, self._dress(i, v, a))) * self.ops[i].coeff

    def leg_matrices(self, i, v):
        topo = self.topology
        f = self.ops[i].factors
        mats = [self.message(i, c, v) for c in topo.neighbors[v]]
        q = topo.local_dim
        mats += [f.get(s, np.eye(q)) for s in topo.sites[v]]
        return mats

    def effective(self, v, op_indices) -> np.ndarray:
        total = None
        for i in op_indices:
            h = functools.reduce(np.kron, self.leg_matrices(i, v)) * self.ops[i].coeff
            total = h if total is None else total + h
        return total


def tts_norm_squared(t: TTSState) -> float:
    env = TTSEnvironments(list(t.tensors), t.topology, [ProductOperator(1.0, {})])
    return env.value(0).real


def tts_product_values(t: TTSState, ops: Sequence[ProductOperator]) -> np.ndarray:
    """Unnormalized ``<psi|op|psi>`` for each product operator."""
    env = TTSEnvironments(list(t.tensors), t.topology, ops)
    return np.array([env.value(i) for i in range(len(ops))])


def tts_product_expectation(t: TTSState, ops) -> complex:
    """``<psi| O_0 (x) ... (x) O_{N-1} |psi>`` for one operator per site.

    ``ops`` is a sequence with one ``q x q`` matrix (or None for the
    identity) per site. The value is not normalized.
    """
    q = t.local_dim
    if len(ops) != t.n_sites:
        raise ValueError("one operator per site required")
    factors = {}
    for s, o in enumerate(ops):
        if o is None:
            continue
        o = np.asarray(o, dtype=complex)
        if o.shape != (q, q):
            raise ValueError(f"operator on site {s} has shape {o.shape}, expected {(q, q)}")
        factors[s] = o
    return complex(tts_product_values(t, [ProductOperator(1.0, factors)])[0])


def tts_expectation(t: TTSState, h: HamiltonianSum) -> float:
    vals = tts_product_values(t, h.product_terms())
    val = vals.sum() / tts_norm_squared(t)
    if abs(val.imag) > 1e-8:
        raise ValueError("non-Hermitian expectation value")
    return float(val.real)


def tts_effective_pair(t: TTSState, vertex: int, h):
    """``(h_tilde, metric_tilde)`` over the flattened tensor of ``vertex``."""
    ops = h.product_terms() if isinstance(h, HamiltonianSum) else list(h)
    ops = ops + [ProductOperator(1.0, {})]
    env = TTSEnvironments(list(t.tensors), t.topology, ops)
    metric = env.effective(vertex, [len(ops) - 1])
    h_t = env.effective(vertex, range(len(ops) - 1))
    if h_t is None:
        h_t = np.zeros_like(metric)
    return h_t, metric


# ----------------------------------------------------------- canonical form

def _qr_toward(ts: list, topo: TreeTopology, u: int, p: int, dims: dict):
    """Make ``u`` an isometry toward ``p`` and absorb the R factor into ``p``."""
    a = ts[u]
    pos = topo.neighbors[u].index(p)
    moved = np.moveaxis(a, pos, -1)
    rest = moved.shape[:-1]
    qm, r = qr_reduce(moved.reshape(-1, moved.shape[-1]))
    k = qm.shape[1]
    ts[u] = np.moveaxis(qm.reshape(rest + (k,)), -1, pos)
    ppos = topo.neighbors[p].index(u)
    ts[p] = np.moveaxis(np.tensordot(r, ts[p], axes=([1], [ppos])), 0, ppos)
    dims[(min(u, p), max(u, p))] = k


def tts_canonicalize(t: TTSState, center: int) -> TTSState:
    """Orthonormalize every chain toward ``center`` by QR decompositions.

    Each R factor is absorbed into the next tensor toward the center, so
    the represented state is unchanged and the metric at the center is the
    identity. Bond dimensions may shrink where a tensor has fewer rows than
    columns.
    """
    topo = t.topology
    ts = list(t.tensors)
    dims = {}
    par = topo.parents(center)
    order = topo.dfs_order(center)
    for u in reversed(order):
        if u == center:
            continue
        _qr_toward(ts, topo, u, par[u], dims)
    return TTSState(topo.with_bond_dims(dims), tuple(ts))


def isometry_error(t: TTSState, vertex: int, toward: int) -> float:
    """Deviation of ``vertex`` from an isometry with output leg ``toward``."""
    a = t.tensors[vertex]
    pos = t.topology.neighbors[vertex].index(toward)
    m = np.moveaxis(a, pos, -1).reshape(-1, a.shape[pos])
    return float(np.abs(m.conj().T @ m - np.eye(m.shape[1])).max())


# ------------------------------------------------------------------ sweeps

def sweep_tree_product_operators(state: TTSState, ops: Sequence[ProductOperator], max_sweeps: int,
                                 rel_tol: float, cutoff: float = 1e-12, result: SweepResult | None = None):
    """Single-vertex sweeps in depth-first order (forward then reversed)."""
    topo = state.topology
    ops = list(ops) + [ProductOperator(1.0, {})]
    n_h = len(ops) - 1
    res = result or SweepResult(None, [])
    order = topo.dfs_order()
    sequence = order + order[::-1][1:]
    center = sequence[0]
    st = tts_canonicalize(state, center)
    topo = st.topology
    ts = list(st.tensors)
    env = TTSEnvironments(ts, topo, ops)
    norm = env.value(n_h, center).real
    current = float(sum(env.value(i, center) for i in range(n_h)).real / norm)
    res.energies.append(current)

    def move(a, b):
        nonlocal topo
        path = topo.path(a, b)
        for x, y in zip(path[:-1], path[1:]):
            dims = {}
            _qr_toward(ts, topo, x, y, dims)
            topo = topo.with_bond_dims(dims)
            env.set_topology(topo)
            env.invalidate(x)
            env.invalidate(y)

    for _ in range(max_sweeps):
        prev = current
        for v in sequence:
            if v != center:
                move(center, v)
                center = v
            try:
                sol = solve_generalized_eig_min(env.effective(v, range(n_h)), env.effective(v, [n_h]), cutoff, ts[v])
            except DegenerateMetricError:
                warnings.warn(f"degenerate metric at vertex {v}; update skipped")
                res.skipped.append(v)
                continue
            ts[v] = sol.eigenvector.reshape(ts[v].shape)
            env.invalidate(v)
            current = sol.eigenvalue
            res.local_energies.append(current)
        res.energies.append(current)
        if abs(prev - current) <= rel_tol * max(abs(current), 1e-12):
            res.converged = True
            break
    res.state = TTSState(topo, tuple(ts))
    return res


def tts_sweep_minimize(t: TTSState, h: HamiltonianSum, max_sweeps: int = 20, rel_tol: float = 1e-10,
                       cutoff: float = 1e-12) -> SweepResult:
    """Variational ground-state search over the vertex tensors of a tree."""
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    return sweep_tree_product_operators(t, h.product_terms(), max_sweeps, rel_tol, cutoff)
