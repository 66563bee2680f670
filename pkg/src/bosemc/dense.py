"""Dense reference propagator for small bases.

Matrix elements come straight from ladder-operator algebra on occupation
vectors and the basis index map, and exponentials from
``scipy.linalg.expm``; nothing here touches the pair-hop tables.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .basis import FockBasis
from .propagation import ControlTrajectory, layer_bonds, EVEN, ODD

DENSE_MAX_DIM = 2000


def _check(basis: FockBasis) -> None:
    if basis.dim > DENSE_MAX_DIM:
        raise ValueError(f"dense reference limited to d <= {DENSE_MAX_DIM}, got {basis.dim}")


def bond_hamiltonian(basis: FockBasis, bond: int) -> np.ndarray:
    """``a_b^+ a_{b+1} + a_{b+1}^+ a_b`` as a dense real matrix (1-based bond)."""
    _check(basis)
    i = bond - 1
    H = np.zeros((basis.dim, basis.dim))
    for k, state in enumerate(basis.states):
        # a_i^+ a_{i+1}: move one boson from site i+1 to site i
        if state[i + 1] > 0:
            new = list(state)
            new[i + 1] -= 1
            new[i] += 1
            amp = np.sqrt(state[i + 1] * (state[i] + 1.0))
            j = basis.index_map[tuple(new)]
            H[j, k] += amp
            H[k, j] += amp
    return H


def diagonal_energies(basis: FockBasis, detunings, interactions) -> np.ndarray:
    energies = np.zeros(basis.dim)
    for k, state in enumerate(basis.states):
        energies[k] = sum(
            detunings[i] * n + interactions[i] * n * (n - 1) for i, n in enumerate(state)
        )
    return energies


def dense_evolve(amplitudes: np.ndarray, basis: FockBasis, traj: ControlTrajectory,
                 swap_parity: bool = False) -> np.ndarray:
    """Step-by-step ``exp(-i dt H3) exp(-i dt H2) exp(-i dt H1)`` with full matrices."""
    _check(basis)
    L = basis.n_modes
    dt = traj.dt
    bonds = {b: bond_hamiltonian(basis, b) for b in range(1, L)}
    psi = np.array(amplitudes, dtype=np.complex128)
    for k in range(traj.n_steps):
        H1 = np.diag(diagonal_energies(basis, traj.detunings[k], traj.interactions[k]))
        J = traj.hop_strengths[k]
        H2 = sum((J[b - 1] * bonds[b] for b in layer_bonds(L, EVEN, swap_parity)),
                 np.zeros((basis.dim, basis.dim)))
        H3 = sum((J[b - 1] * bonds[b] for b in layer_bonds(L, ODD, swap_parity)),
                 np.zeros((basis.dim, basis.dim)))
        psi = expm(-1j * dt * H1) @ psi
        psi = expm(-1j * dt * H2) @ psi
        psi = expm(-1j * dt * H3) @ psi
    return psi
