"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times one hop layer, one diagonal layer and a full evolution for a few
system sizes, and checks the two backends agree.
"""

import argparse
import time

import numpy as np

from bosemc import kernels
from bosemc.basis import enumerate_basis
from bosemc.propagation import evolve_amplitudes, layer_bonds, propagation_tables
from bosemc.qfi import haar_random_state
from bosemc.verify import random_trajectory

SYSTEMS = [(40, 3), (200, 3), (30, 5), (12, 8)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(N, L, repeat):
    basis = enumerate_basis(N, L)
    tables = propagation_tables(basis)
    rng = np.random.default_rng(0)
    psi0 = haar_random_state(basis, rng).amplitudes
    traj = random_trajectory(rng, 20.0, 5, L)
    odd = [tables.blocks[b] for b in layer_bonds(L, "odd")]
    sp = tables.spectra
    out = {}
    finals = {}
    for name, be in kernels.BACKENDS.items():
        psi = psi0.copy()

        def hop():
            for blk in odd:
                be.apply_bond_hop(psi, blk.flat, blk.offsets, blk.widths, sp.vecs, sp.vecs_t,
                                  sp.vec_offsets, sp.evals, sp.eval_offsets, 0.37)

        def diag():
            be.apply_diagonal(psi, basis.occupations, traj.detunings[0], traj.interactions[0], 0.37)

        def full():
            work = psi0.copy()
            evolve_amplitudes(work, traj, tables, backend=name)
            finals[name] = work

        out[name] = (best_of(hop, repeat), best_of(diag, repeat), best_of(full, repeat))
    err = max(np.max(np.abs(v - finals["python"])) for v in finals.values())
    return basis.dim, out, err


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'N':>4} {'L':>2} {'d':>9}  {'backend':<9} {'hop layer':>11} {'diagonal':>11} {'evolve':>11}  speedup")
    for N, L in SYSTEMS:
        d, out, err = bench(N, L, args.repeat)
        ref = out["python"][2]
        for name, (h, g, f) in out.items():
            print(f"{N:>4} {L:>2} {d:>9}  {name:<9} {h * 1e3:9.3f}ms {g * 1e3:9.3f}ms "
                  f"{f * 1e3:9.3f}ms  {ref / f:5.2f}x")
        print(f"{'':>18}backend max |diff| {err:.1e}")


if __name__ == "__main__":
    main()
