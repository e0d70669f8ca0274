"""Graph states are exact for RAGE with a product backbone but costly for an MPS.

Prints the energy of the graph Hamiltonian of a random graph reached by a
bond-dimension-1 RAGE state and by MPS of growing bond dimension.
"""

import argparse

import numpy as np

from ragetn.hamiltonians import graph_hamiltonian
from ragetn.mps import mps_sweep_minimize, random_mps
from ragetn.rage import rage_alternating_minimize, rage_state
from ragetn.wgs import graph_state_phases


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sites", type=int, default=10)
    ap.add_argument("--density", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.sites
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < args.density]
    h = graph_hamiltonian(edges, n)
    print(f"{n} sites, {len(edges)} edges, exact ground energy {-n}")

    r = rage_state(random_mps(n, 1, seed=args.seed), graph_state_phases(edges, n), with_rotations=False)
    res = rage_alternating_minimize(r, h, schedule=("tensors",), max_rounds=10)
    print(f"RAGE D=1: {res.energies[-1]:.10f}")
    for d in (1, 2, 4, 8):
        e = mps_sweep_minimize(random_mps(n, d, seed=args.seed), h, 20).energies[-1]
        print(f"MPS  D={d}: {e:.10f}")


if __name__ == "__main__":
    main()
