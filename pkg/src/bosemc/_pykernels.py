"""Pure numpy versions of the kernels in ``_core.pyx`` (same signatures)."""

import numpy as np


def apply_diagonal(psi, occ, detunings, interactions, dt):
    detunings = np.asarray(detunings, dtype=np.float64)
    interactions = np.asarray(interactions, dtype=np.float64)
    if detunings.shape != (occ.shape[1],) or interactions.shape != (occ.shape[1],):
        raise ValueError("control rows must have one entry per mode")
    if psi.shape[0] != occ.shape[0]:
        raise ValueError("state length does not match the basis")
    n = occ.astype(np.float64)
    energy = n @ detunings + (n * (n - 1.0)) @ interactions
    psi *= np.exp(-1j * dt * energy)


def apply_bond_hop(psi, flat, offsets, widths, vecs, vecs_t, vec_offsets, evals, eval_offsets, theta):
    n_blocks = widths.shape[0]
    if offsets.shape[0] != n_blocks + 1 or offsets[n_blocks] != psi.shape[0]:
        raise ValueError("block tables do not match the state length")
    if vec_offsets.shape[0] < n_blocks or eval_offsets.shape[0] < n_blocks:
        raise ValueError("hop spectra do not cover every pair occupancy")
    if theta == 0.0:
        return
    for r in range(1, n_blocks):
        K = int(widths[r])
        if K == 0:
            continue
        m = r + 1
        idx = flat[offsets[r]:offsets[r + 1]].reshape(m, K)
        V = vecs[vec_offsets[r]:vec_offsets[r] + m * m].reshape(m, m)
        phase = np.exp(-1j * theta * evals[eval_offsets[r]:eval_offsets[r] + m])
        y = V.T @ psi[idx]
        y *= phase[:, None]
        psi[idx] = V @ y
