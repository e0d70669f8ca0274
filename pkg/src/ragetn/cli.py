"""Command line harness: ``ragetn run CONFIG``, ``ragetn selftest``, ``ragetn param-count``.

Configs are INI files (``configparser`` syntax). Example::

    [experiment]
    kind = ground_state
    seed = 1
    output = results/ising.csv

    [model]
    builder = ising_2d
    lx = 2
    ly = 2
    b = 1.0

    [ansatz]
    backbone = mps
    bond_dim = 2

Set ``RAGETN_THREADS`` to cap the BLAS thread count; it only takes effect
when set before numpy is first imported, which the console script does.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io as _io
import json
import os
import re
import sys
import time

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
KINDS = ("ground_state", "circuit_fidelity", "oracle_check", "model_scan")
BACKBONES = ("mps", "tts", "rage-mps", "rage-tts")


def _apply_thread_env():
    n = os.environ.get("RAGETN_THREADS")
    if n:
        for var in THREAD_VARS:
            os.environ.setdefault(var, n)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def fmt_energy(x: float) -> str:
    return f"{x:.12g}"


def fmt_fidelity(x: float) -> str:
    return f"{x:.10g}"


# ------------------------------------------------------------ config parsing

class Config:
    """Parsed INI file with line numbers kept for error messages."""

    def __init__(self, text: str, path: str = "<config>"):
        self.path = path
        self.text = text
        self.parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            self.parser.read_string(text, source=path)
        except configparser.ParsingError as exc:
            lineno = exc.errors[0][0] if exc.errors else None
            raise ConfigError(f"cannot parse: {exc.errors[0][1].strip() if exc.errors else exc}", lineno) from exc
        except configparser.Error as exc:
            raise ConfigError(str(exc), getattr(exc, "lineno", None)) from exc
        self._lines = self._index_lines(text)

    @staticmethod
    def _index_lines(text):
        out = {}
        section = None
        for i, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            m = re.match(r"\[([^\]]+)\]", s)
            if m:
                section = m.group(1).strip()
                out[(section, None)] = i
                continue
            m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", s)
            if m and section is not None:
                out[(section, m.group(1).strip().lower())] = i
        return out

    def line(self, section, key=None):
        return self._lines.get((section, key))

    def error(self, section, key, message):
        return ConfigError(f"[{section}] {key}: {message}" if key else f"[{section}] {message}", self.line(section, key))

    def has(self, section, key=None):
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def get(self, section, key, default=None, required=False):
        if not self.parser.has_section(section):
            if required:
                raise ConfigError(f"missing section [{section}]")
            return default
        if not self.parser.has_option(section, key):
            if required:
                raise self.error(section, None, f"missing key '{key}'")
            return default
        return self.parser.get(section, key)

    def typed(self, section, key, kind, default=None, required=False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return kind(raw)
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"invalid value {raw!r} ({exc})") from exc

    def items(self, section):
        return dict(self.parser.items(section)) if self.parser.has_section(section) else {}

    def echo(self) -> dict:
        return {s: dict(self.parser.items(s)) for s in self.parser.sections()}


def parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_list(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def parse_values(s: str) -> list[float]:
    """``a, b, c`` or ``start:stop:count`` (inclusive linear grid)."""
    import numpy as np

    s = s.strip()
    if ":" in s:
        a, b, n = s.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in parse_list(s)]


def parse_scalar(s: str):
    s = s.strip()
    for kind in (int, float):
        try:
            return kind(s)
        except ValueError:
            pass
    try:
        return parse_bool(s)
    except ValueError:
        return s


def parse_edges(s: str) -> list[tuple[int, int]]:
    out = []
    for tok in parse_list(s):
        a, b = tok.split("-")
        out.append((int(a), int(b)))
    return out


# ------------------------------------------------------------------ models

def build_model(cfg: Config, section: str = "model", overrides: dict | None = None):
    from . import hamiltonians as hm

    builders = {
        "ising_2d": hm.ising_2d, "heisenberg_2d": hm.heisenberg_2d, "spin_glass_2d": hm.spin_glass_2d,
        "long_range_ising": hm.long_range_ising, "graph_hamiltonian": hm.graph_hamiltonian,
        "disturbed_graph_hamiltonian": hm.disturbed_graph_hamiltonian,
        "toric_code_hamiltonian": hm.toric_code_hamiltonian, "kitaev_perturbed": hm.kitaev_perturbed,
    }
    name = cfg.get(section, "builder", required=True)
    if name not in builders:
        raise cfg.error(section, "builder", f"unknown builder {name!r}; choose from {sorted(builders)}")
    params = {}
    for key, raw in cfg.items(section).items():
        if key == "builder":
            continue
        if key == "edges":
            params[key] = parse_edges(raw)
        elif key == "fields":
            params[key] = parse_values(raw)
        else:
            params[key] = parse_scalar(raw)
    params.update(overrides or {})
    if name == "graph_hamiltonian" and "n_sites" not in params and "edges" in params:
        params["n_sites"] = 1 + max(max(e) for e in params["edges"])
    try:
        return builders[name](**params)
    except TypeError as exc:
        raise cfg.error(section, "builder", f"bad parameters for {name}: {exc}") from exc


# -------------------------------------------------------------- param count

def _flat_drop(neighbors, dims, phys):
    """Vertices whose tensor is an invertible basis change, peeled from the leaves."""
    alive = set(range(len(neighbors)))
    absorbed = {v: 1 for v in alive}  # dimension flowing in from dropped subtrees
    changed = True
    while changed and len(alive) > 1:
        changed = False
        for v in sorted(alive):
            live = [u for u in neighbors[v] if u in alive]
            if len(live) != 1:
                continue
            p = live[0]
            inner = phys[v]
            for u in neighbors[v]:
                if u != p:
                    inner *= dims[(min(u, v), max(u, v))]
            if inner == dims[(min(v, p), max(v, p))]:
                alive.discard(v)
                changed = True
                if len(alive) == 1:
                    break
    return alive


def param_count(spec: dict, mode: str = "raw", units: str | None = None) -> int:
    """Number of variational parameters of an ansatz.

    ``spec`` keys: ``backbone`` (mps, tts, rage-mps, rage-tts), ``n``,
    ``d`` and optionally ``q``, ``boundary``. Modes:

    * ``raw``: closed MPS ``q N D^2``, open MPS ``q (2D + (N-2) D^2)``,
      tree: sum of tensor sizes, phase layer ``N(N-1)/2`` and rotations
      ``4N``; default units ``mixed`` adds complex tensor entries and real
      layer parameters as they are.
    * ``flat``: bonds capped by the Hilbert-space dimension on either side
      and tensors that are square basis changes at the ends dropped;
      default units ``complex`` counts two real layer parameters as one.

    ``units`` may be ``mixed``, ``complex`` or ``real`` (tensor entries doubled).
    """
    from .tts import subcubic_tree

    kind = spec.get("backbone", "mps")
    if kind not in BACKBONES:
        raise ValueError(f"unknown backbone {kind!r}")
    n = int(spec["n"])
    d = int(spec["d"])
    q = int(spec.get("q", 2))
    boundary = spec.get("boundary", "open")
    units = units or ("mixed" if mode == "raw" else "complex")
    if mode not in ("raw", "flat"):
        raise ValueError("mode must be raw or flat")
    if units not in ("mixed", "complex", "real"):
        raise ValueError("units must be mixed, complex or real")
    base = kind.replace("rage-", "")
    if base == "mps":
        if mode == "raw":
            entries = q * n * d * d if boundary == "closed" else (q * d if n == 1 else q * (2 * d + (n - 2) * d * d))
        else:
            bonds = [min(d, q ** k, q ** (n - k)) for k in range(1, n)]
            dims = {(k, k + 1): bonds[k] for k in range(n - 1)}
            nbrs = [tuple(x for x in (k - 1, k + 1) if 0 <= x < n) for k in range(n)]
            alive = _flat_drop(nbrs, dims, [q] * n)
            entries = 0
            for k in alive:
                dl = bonds[k - 1] if k > 0 else 1
                dr = bonds[k] if k < n - 1 else 1
                entries += dl * dr * q
    else:
        topo = subcubic_tree(n, d, q)
        sizes = {}
        for v in range(topo.n_vertices):
            size = 1
            for s in topo.leg_shape(v):
                size *= s
            sizes[v] = size
        if mode == "raw":
            entries = sum(sizes.values())
        else:
            dims = {(a, b): dim for a, b, dim in topo.bond_dims}
            phys = [q ** len(s) for s in topo.sites]
            alive = _flat_drop(topo.neighbors, dims, phys)
            entries = sum(sizes[v] for v in alive)
    layer = 0
    if kind.startswith("rage"):
        layer = n * (n - 1) // 2 * (q - 1) ** 2 + (4 * n if q == 2 else 0)
    if units == "mixed":
        return entries + layer
    if units == "complex":
        return entries + layer // 2 + layer % 2
    return 2 * entries + layer


def ansatz_param_count(cfg: Config, section: str, n: int, q: int) -> int:
    kind = cfg.get(section, "backbone", "mps")
    spec = {"backbone": kind, "n": n, "d": cfg.typed(section, "bond_dim", int, 2), "q": q,
            "boundary": cfg.get(section, "boundary", "open")}
    return param_count(spec, cfg.get(section, "count_mode", "raw"))


# --------------------------------------------------------------- ansatz runs

def run_ansatz(cfg: Config, section: str, h, seed: int):
    """Optimize one ansatz; returns (energy trace, final state)."""
    import numpy as np

    from .mps import mps_sweep_minimize, random_mps
    from .rage import rage_alternating_minimize, rage_state
    from .tts import chain_tree, greedy_site_groups, random_tts, subcubic_tree, tts_sweep_minimize
    from .wgs import AdjacencyPhases, graph_state_phases

    kind = cfg.get(section, "backbone", "mps")
    if kind not in BACKBONES:
        raise cfg.error(section, "backbone", f"unknown backbone {kind!r}; choose from {BACKBONES}")
    d = cfg.typed(section, "bond_dim", int, 2)
    n, q = h.n_sites, h.local_dim
    sweeps = cfg.typed("optimizer", "sweeps", int, 20)
    rel_tol = cfg.typed("optimizer", "rel_tol", float, 1e-10)
    restarts = cfg.typed("optimizer", "restarts", int, 1)
    if restarts < 1:
        raise cfg.error("optimizer", "restarts", "must be >= 1")

    def backbone(s):
        base = kind.replace("rage-", "")
        if base == "mps":
            return random_mps(n, d, q, cfg.get(section, "boundary", "open"), seed=s)
        tree = cfg.get(section, "tree", "subcubic")
        if tree == "subcubic":
            groups = greedy_site_groups(h.coupling_weights()) if cfg.typed(section, "greedy_groups", parse_bool, False) else None
            topo = subcubic_tree(n, d, q, groups)
        elif tree in ("chain", "flat_chain"):
            topo = chain_tree(n, d, q, flat=tree == "flat_chain")
        else:
            raise cfg.error(section, "tree", f"unknown tree kind {tree!r}")
        return random_tts(topo, seed=s)

    best = None
    for r in range(restarts):
        s = seed + r
        if kind in ("mps", "tts"):
            b = backbone(s)
            res = (mps_sweep_minimize if kind == "mps" else tts_sweep_minimize)(b, h, sweeps, rel_tol)
            trace, state = list(res.energies), res.state
        else:
            src = cfg.get(section, "initial_phases", "zero")
            if src == "zero":
                phases = AdjacencyPhases.zeros(n, q)
            elif src == "graph":
                edges = h.lattice.get("edges")
                if edges is None:
                    raise cfg.error(section, "initial_phases", "model has no graph edges")
                phases = graph_state_phases(edges, n)
            elif src == "random":
                phases = AdjacencyPhases.random(n, q, seed=s)
            else:
                raise cfg.error(section, "initial_phases", f"unknown source {src!r}")
            schedule = parse_list(cfg.get(section, "schedule", "tensors, rotations, phases"))
            if cfg.typed(section, "fixed_phases", parse_bool, False):
                schedule = [x for x in schedule if x != "phases"]
            st = rage_state(backbone(s), phases, with_rotations=q == 2)
            try:
                res = rage_alternating_minimize(st, h, schedule, rel_tol, max_rounds=sweeps,
                                                tensor_sweeps=cfg.typed(section, "tensor_sweeps", int, 2),
                                                gradient=cfg.typed(section, "gradient", parse_bool, True))
            except ValueError as exc:
                raise cfg.error(section, "schedule", str(exc)) from exc
            trace, state = list(res.energies), res.state
        if best is None or trace[-1] < best[0][-1]:
            best = (trace, state)
    return best[0], best[1]


# ------------------------------------------------------------- experiments

def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


SCHEMAS = {
    "ground_state": ["sweep", "energy", "param_count"],
    "circuit_fidelity": ["block", "mean_fidelity_mps", "mean_fidelity_rage"],
    "oracle_check": ["check", "result", "max_error"],
}


def exp_ground_state(cfg: Config, seed: int):
    h = build_model(cfg)
    trace, _ = run_ansatz(cfg, "ansatz", h, seed)
    pc = ansatz_param_count(cfg, "ansatz", h.n_sites, h.local_dim)
    rows = [[i, fmt_energy(e), pc] for i, e in enumerate(trace)]
    extra = {"final_energy": fmt_energy(trace[-1])}
    if h.local_dim ** h.n_sites <= 2 ** 14:
        from .exact_oracle import exact_ground_state

        gs = exact_ground_state(h)
        extra["exact_energy"] = fmt_energy(gs.energy)
        extra["relative_error"] = f"{abs(trace[-1] - gs.energy) / max(abs(gs.energy), 1e-300):.3e}"
    return SCHEMAS["ground_state"], rows, extra


def exp_circuit_fidelity(cfg: Config, seed: int):
    from .circuits import random_circuit_study

    n = cfg.typed("circuit", "n_sites", int, 10)
    blocks = cfg.typed("circuit", "n_blocks", int, 20)
    n_seeds = cfg.typed("circuit", "n_seeds", int, 50)
    d = cfg.typed("circuit", "bond_dim", int, 2)
    if n > 14:
        raise cfg.error("circuit", "n_sites", "oracle comparison limited to 14 sites")
    study = random_circuit_study(n, blocks, range(seed, seed + n_seeds), d)
    rows = [[b + 1, fmt_fidelity(study.mean["mps"][b]), fmt_fidelity(study.mean["rage"][b])] for b in range(blocks)]
    return SCHEMAS["circuit_fidelity"], rows, {}


def exp_oracle_check(cfg: Config, seed: int):
    results = selftest_checks(seed)
    rows = [[name, "pass" if ok else "fail", f"{err:.3e}"] for name, ok, err in results]
    for name, ok, err in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} max_error={err:.3e}")
    return SCHEMAS["oracle_check"], rows, {"all_passed": all(ok for _, ok, _ in results)}


def exp_model_scan(cfg: Config, seed: int):
    param = cfg.get("scan", "parameter", required=True)
    values = cfg.typed("scan", "values", parse_values, required=True)
    sections = [s for s in cfg.parser.sections() if s == "ansatz" or s.startswith("ansatz.")]
    if not sections:
        raise ConfigError("model_scan needs at least one [ansatz] or [ansatz.NAME] section")
    names = [s.split(".", 1)[1] if "." in s else "ansatz" for s in sections]
    header = [param, "exact_energy", "exact_first_excited"] + [f"energy_{nm}" for nm in names]
    rows = []
    for v in values:
        h = build_model(cfg, overrides={param: v})
        exact = ["", ""]
        if h.local_dim ** h.n_sites <= 2 ** 14:
            from .exact_oracle import exact_ground_state

            gs = exact_ground_state(h)
            exact = [fmt_energy(gs.energy), fmt_energy(gs.first_excited)]
        row = [f"{v:.12g}"] + exact
        for s in sections:
            trace, _ = run_ansatz(cfg, s, h, seed)
            row.append(fmt_energy(trace[-1]))
        rows.append(row)
    return header, rows, {}


EXPERIMENTS = {"ground_state": exp_ground_state, "circuit_fidelity": exp_circuit_fidelity,
               "oracle_check": exp_oracle_check, "model_scan": exp_model_scan}


def run(config_path: str, output: str | None = None) -> int:
    from . import __version__
    from .io import atomic_write

    with open(config_path) as fh:
        text = fh.read()
    cfg = Config(text, config_path)
    kind = cfg.get("experiment", "kind", required=True)
    if kind not in KINDS:
        raise cfg.error("experiment", "kind", f"unknown kind {kind!r}; choose from {KINDS}")
    seed = cfg.typed("experiment", "seed", int, None)
    if seed is None:
        if kind == "oracle_check":
            seed = 0
        else:
            raise cfg.error("experiment", None, "missing key 'seed' (required for stochastic runs)")
    out = output or cfg.get("experiment", "output", None)
    if out is None:
        out = os.path.splitext(os.path.basename(config_path))[0] + ".csv"
    t0 = time.perf_counter()
    header, rows, extra = EXPERIMENTS[kind](cfg, seed)
    wall = time.perf_counter() - t0
    atomic_write(out, _csv_text(header, rows))
    meta = {"library_version": __version__, "kind": kind, "seed": seed, "config": cfg.echo(),
            "wall_time_seconds": round(wall, 3), "csv": os.path.basename(out), "columns": header}
    meta.update(extra)
    atomic_write(out + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(rows)} rows) in {wall:.1f} s")
    if kind == "oracle_check" and not extra.get("all_passed", True):
        return 1
    return 0


# ----------------------------------------------------------------- selftest

def selftest_checks(seed: int = 0, tol: float = 1e-9):
    """Quick oracle comparisons; returns ``(name, passed, max_error)`` triples."""
    import numpy as np

    from .circuits import Gate, apply_controlled_phase, apply_gate_dense, qft_circuit, circuit_unitary
    from .exact_oracle import StateVector, exact_ground_state, expand, exact_expectation, fidelity, reduced_density
    from .hamiltonians import graph_hamiltonian, ising_2d, random_pauli_sum
    from .mps import mps_expectation, mps_reduced_density, mps_sweep_minimize, random_mps
    from .peps import peps_boundary_contract, peps_exact_contract, random_peps
    from .rage import RageState, rage_expectation, rage_reduced_density, graph_rage_state
    from .tts import random_tts, subcubic_tree, tts_expectation
    from .wgs import AdjacencyPhases, LocalRotations, stabilizer_to_graph, toric_code_stabilizers, \
        graph_state_phases, local_clifford_matrix
    from .exact_oracle import apply_local, apply_phases_dense

    out = []
    n = 6
    h = random_pauli_sum(n, 12, 3, seed)
    m = random_mps(n, 3, seed=seed)
    psi = expand(m)
    err = max(abs(mps_expectation(m, h) - exact_expectation(psi, h)),
              float(np.abs(mps_reduced_density(m, [1, 4]) - reduced_density(psi, [1, 4])).max()))
    out.append(("mps_expectation", err < tol, err))
    t = random_tts(subcubic_tree(n, 3), seed=seed)
    err = abs(tts_expectation(t, h) - exact_expectation(expand(t), h))
    out.append(("tts_expectation", err < tol, err))
    r = RageState(random_mps(n, 2, seed=seed), AdjacencyPhases.random(n, 2, seed), LocalRotations.random(n, seed))
    psi = expand(r)
    err = max(abs(rage_expectation(r, h) - exact_expectation(psi, h)),
              float(np.abs(rage_reduced_density(r, [0, 5]) - reduced_density(psi, [0, 5])).max()))
    out.append(("rage_mps_expectation", err < tol, err))
    r = RageState(random_tts(subcubic_tree(n, 2), seed=seed), AdjacencyPhases.random(n, 2, seed + 1),
                  LocalRotations.random(n, seed + 1))
    err = abs(rage_expectation(r, h) - exact_expectation(expand(r), h))
    out.append(("rage_tts_expectation", err < tol, err))
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (1, 4)]
    err = abs(rage_expectation(graph_rage_state(edges, 5), graph_hamiltonian(edges, 5)) + 5)
    out.append(("graph_state_energy", err < tol, err))
    g = toric_code_stabilizers(2, 3)
    e, corr = stabilizer_to_graph(g)
    v = np.ones((2,) * 12, complex) / 2 ** 6
    v = apply_phases_dense(v, graph_state_phases(e, 12))
    for k, c in enumerate(corr):
        v = apply_local(v, k, local_clifford_matrix(c))
    st = StateVector(v.reshape(-1), 12)
    err = max(abs(exact_expectation(st, s) - 1) for s in g.strings())
    out.append(("toric_code_to_graph", err < tol, err))
    p = random_peps(3, 3, 2, seed=seed)
    ex = peps_exact_contract(p)
    err = abs(peps_boundary_contract(p, 16)[0] - ex) / abs(ex)
    out.append(("peps_boundary_contraction", err < 1e-10, err))
    gate = Gate.cphase(0, 3, 1.1)
    r = RageState(random_mps(n, 2, seed=seed), AdjacencyPhases.random(n, 2, seed))
    ref = StateVector(apply_gate_dense(expand(r).tensor(), gate).reshape(-1), n)
    err = abs(1 - fidelity(expand(apply_controlled_phase(r, gate)), ref))
    out.append(("controlled_phase_absorption", err < 1e-12, err))
    u = circuit_unitary(qft_circuit(4))
    dim = 16
    f = np.exp(2j * np.pi * np.outer(np.arange(dim), np.arange(dim)) / dim) / 4
    rev = [int(format(i, "04b")[::-1], 2) for i in range(dim)]
    err = float(np.abs(u - f[rev, :]).max())
    out.append(("qft_unitary", err < 1e-10, err))
    ising = ising_2d(2, 2, 1.0, 1.0)
    res = mps_sweep_minimize(random_mps(4, 4, seed=seed), ising, 10)
    err = abs(res.energies[-1] - exact_ground_state(ising).energy)
    out.append(("mps_ground_state", err < 1e-8, err))
    return out


def selftest(seed: int = 0) -> int:
    results = selftest_checks(seed)
    for name, ok, err in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} max_error={err:.3e}")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


# --------------------------------------------------------------------- main

def _spec_from_args(tokens):
    spec = {}
    for tok in tokens:
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        spec[k.strip()] = v.strip()
    return spec


def main(argv=None) -> int:
    _apply_thread_env()
    ap = argparse.ArgumentParser(prog="ragetn", description="Tensor networks with weighted-graph enhancement.")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from an INI config")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output", help="CSV path (overrides [experiment] output)")
    p_self = sub.add_parser("selftest", help="run quick oracle checks")
    p_self.add_argument("--seed", type=int, default=0)
    p_pc = sub.add_parser("param-count", help="count ansatz parameters, e.g. backbone=mps n=16 d=4")
    p_pc.add_argument("spec", nargs="+", help="key=value pairs: backbone, n, d, q, boundary")
    p_pc.add_argument("--mode", choices=("raw", "flat"), default="raw")
    p_pc.add_argument("--units", choices=("mixed", "complex", "real"), default=None)
    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            return run(args.config, args.output)
        if args.command == "selftest":
            return selftest(args.seed)
        print(param_count(_spec_from_args(args.spec), args.mode, args.units))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
