"""JSON serialization for states, operators and circuits.

Arrays are stored as ``{"shape": [...], "data": [[re, im], ...]}`` in C
order. Python writes floats with the shortest repr that round-trips, so
loading returns bit-identical values.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .circuits import Circuit, Gate
from .hamiltonians import HamiltonianSum, LocalOperator, PauliString
from .mps import MPSState
from .peps import PEPSState
from .rage import RageState
from .tts import TreeTopology, TTSState
from .wgs import AdjacencyPhases, LocalRotations

FORMAT = "ragetn"
VERSION = 1


def encode_array(a) -> dict:
    a = np.asarray(a)
    flat = a.reshape(-1)
    if np.iscomplexobj(flat):
        data = [[float(z.real), float(z.imag)] for z in flat]
    else:
        data = [[float(x), 0.0] for x in flat]
    return {"shape": list(a.shape), "data": data}


def decode_array(d: dict, real: bool = False) -> np.ndarray:
    data = np.array(d["data"], dtype=float).reshape(-1, 2)
    out = data[:, 0] if real else data[:, 0] + 1j * data[:, 1]
    return out.reshape(d["shape"])


def _coeff(c) -> list:
    c = complex(c)
    return [c.real, c.imag]


def to_dict(obj) -> dict:
    if isinstance(obj, MPSState):
        return {"type": "MPSState", "boundary": obj.boundary, "tensors": [encode_array(t) for t in obj.tensors]}
    if isinstance(obj, TTSState):
        topo = obj.topology
        return {"type": "TTSState",
                "topology": {"neighbors": [list(n) for n in topo.neighbors], "sites": [list(s) for s in topo.sites],
                             "bond_dims": [list(b) for b in topo.bond_dims], "local_dim": topo.local_dim,
                             "root": topo.root},
                "tensors": [encode_array(t) for t in obj.tensors]}
    if isinstance(obj, PEPSState):
        return {"type": "PEPSState", "lx": obj.lx, "ly": obj.ly, "tensors": [encode_array(t) for t in obj.tensors]}
    if isinstance(obj, AdjacencyPhases):
        return {"type": "AdjacencyPhases", "table": encode_array(obj.table)}
    if isinstance(obj, LocalRotations):
        return {"type": "LocalRotations", "params": encode_array(obj.params)}
    if isinstance(obj, RageState):
        return {"type": "RageState", "backbone": to_dict(obj.backbone), "phases": to_dict(obj.phases),
                "rotations": None if obj.rotations is None else to_dict(obj.rotations)}
    if isinstance(obj, HamiltonianSum):
        terms = []
        for t in obj.terms:
            if isinstance(t, PauliString):
                terms.append({"kind": "pauli", "letters": t.letters, "coeff": _coeff(t.coeff)})
            elif isinstance(t, LocalOperator):
                terms.append({"kind": "local", "sites": list(t.sites), "matrix": encode_array(t.matrix)})
            else:
                raise TypeError(f"cannot serialize term {type(t).__name__}")
        return {"type": "HamiltonianSum", "n_sites": obj.n_sites, "local_dim": obj.local_dim,
                "lattice": json.loads(json.dumps(obj.lattice, default=list)), "terms": terms}
    if isinstance(obj, Circuit):
        gates = []
        for g in obj.gates:
            if g.kind == "single":
                gates.append({"kind": "single", "sites": list(g.sites), "matrix": encode_array(g.matrix)})
            else:
                gates.append({"kind": "cphase", "sites": list(g.sites), "angle": g.angle})
        return {"type": "Circuit", "n_sites": obj.n_sites, "seed": obj.seed, "global_phase": obj.global_phase,
                "gates": gates}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_dict(d: dict):
    kind = d.get("type")
    if kind == "MPSState":
        return MPSState(tuple(decode_array(t) for t in d["tensors"]), d["boundary"])
    if kind == "TTSState":
        t = d["topology"]
        topo = TreeTopology(tuple(tuple(n) for n in t["neighbors"]), tuple(tuple(s) for s in t["sites"]),
                            tuple(tuple(b) for b in t["bond_dims"]), t["local_dim"], t["root"])
        return TTSState(topo, tuple(decode_array(x) for x in d["tensors"]))
    if kind == "PEPSState":
        return PEPSState(d["lx"], d["ly"], tuple(decode_array(t) for t in d["tensors"]))
    if kind == "AdjacencyPhases":
        return AdjacencyPhases(decode_array(d["table"], real=True))
    if kind == "LocalRotations":
        return LocalRotations(decode_array(d["params"], real=True))
    if kind == "RageState":
        rot = d.get("rotations")
        return RageState(from_dict(d["backbone"]), from_dict(d["phases"]), None if rot is None else from_dict(rot))
    if kind == "HamiltonianSum":
        n = d["n_sites"]
        terms = []
        for t in d["terms"]:
            if t["kind"] == "pauli":
                c = complex(*t["coeff"])
                terms.append(PauliString(t["letters"], c.real if c.imag == 0 else c))
            else:
                terms.append(LocalOperator(n, tuple(t["sites"]), decode_array(t["matrix"]), d["local_dim"]))
        return HamiltonianSum(n, terms, d["local_dim"], d.get("lattice", {}))
    if kind == "Circuit":
        gates = []
        for g in d["gates"]:
            if g["kind"] == "single":
                gates.append(Gate.single(g["sites"][0], decode_array(g["matrix"])))
            else:
                gates.append(Gate.cphase(g["sites"][0], g["sites"][1], g["angle"]))
        return Circuit(d["n_sites"], tuple(gates), d.get("seed"), d.get("global_phase", 0.0))
    raise ValueError(f"unknown record type {kind!r}")


def dumps(obj) -> str:
    return json.dumps({"format": FORMAT, "version": VERSION, "object": to_dict(obj)})


def loads(text: str):
    d = json.loads(text)
    if d.get("format") != FORMAT:
        raise ValueError("not a ragetn record")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported version {d.get('version')}")
    return from_dict(d["object"])


def atomic_write(path: str, text: str):
    """Write via a temporary file in the same directory and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        # mkstemp creates the file 0600; give it the usual umask-based mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path: str, obj):
    atomic_write(path, dumps(obj))


def load(path: str):
    with open(path) as fh:
        return loads(fh.read())
