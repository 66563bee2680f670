"""Reference states and the quantum Fisher information of a pure state w.r.t. the tilt.

The tilt generator is ``sum_i i * n_i`` with 1-based sites.  The symmetric
spin convention differs from it by a constant, which a variance ignores.
"""

from __future__ import annotations

from math import lgamma

import numpy as np

from .basis import FockBasis
from .propagation import StateVector


def qfi(state: StateVector | np.ndarray, tilt: np.ndarray | None = None) -> float:
    """``4 * Var(tilt)`` under the probabilities ``|psi_k|^2``.

    ``state`` may also be a raw amplitude vector, in which case ``tilt`` is
    required.
    """
    if isinstance(state, StateVector):
        amps = state.amplitudes
        if tilt is None:
            tilt = state.basis.tilt_values
    else:
        amps = np.asarray(state)
        if tilt is None:
            raise ValueError("tilt values are required for a raw amplitude vector")
    tilt = np.asarray(tilt, dtype=np.float64)
    if tilt.shape != amps.shape:
        raise ValueError(f"tilt has shape {tilt.shape}, state has {amps.shape}")
    p = amps.real ** 2 + amps.imag ** 2
    # Centre on the probability-weighted mean: avoids cancellation for large s.
    mean = float(p @ tilt)
    dev = tilt - mean
    return max(0.0, 4.0 * float(p @ (dev * dev)))


def heisenberg_limit(n_particles: int, n_modes: int) -> float:
    return float(n_particles ** 2 * (n_modes - 1) ** 2)


def fock_state(basis: FockBasis, occupation) -> StateVector:
    occupation = tuple(int(x) for x in occupation)
    if len(occupation) != basis.n_modes or sum(occupation) != basis.n_particles or min(occupation) < 0:
        raise ValueError(f"{occupation} is not a valid occupation for this basis")
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[basis.index_of(occupation)] = 1.0
    return StateVector(basis, amps)


def initial_state(basis: FockBasis) -> StateVector:
    """All bosons on site 1, i.e. basis index 0."""
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(basis, amps)


def ghz_state(basis: FockBasis, phase: float = 0.0) -> StateVector:
    """``(|N0..0> + exp(i phase)|0..0N>) / sqrt(2)``."""
    L, N = basis.n_modes, basis.n_particles
    if L < 2:
        raise ValueError("a GHZ-like state needs at least two modes")
    if N == 0:
        raise ValueError("a GHZ-like state needs at least one particle")
    # Descending lexicographic order puts (N,0,..,0) first and (0,..,0,N) last.
    first, last = 0, basis.dim - 1
    assert basis.occupations[first, 0] == N and basis.occupations[last, -1] == N
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[first] = 1.0 / np.sqrt(2.0)
    amps[last] = np.exp(1j * phase) / np.sqrt(2.0)
    return StateVector(basis, amps)


def coherent_state(basis: FockBasis, mode_amplitudes) -> StateVector:
    """Product state of N bosons in the single-particle orbital ``mode_amplitudes``.

    Amplitude on ``n`` is ``sqrt(N! / prod n_i!) * prod alpha_i ** n_i``,
    evaluated in log space.  The input is normalized first.
    """
    alpha = np.asarray(mode_amplitudes, dtype=np.complex128)
    if alpha.shape != (basis.n_modes,):
        raise ValueError(f"need {basis.n_modes} mode amplitudes, got shape {alpha.shape}")
    norm = np.linalg.norm(alpha)
    if norm == 0.0:
        raise ValueError("mode amplitudes have zero norm")
    alpha = alpha / norm
    occ = basis.occupations
    N = basis.n_particles
    log_fact = np.array([lgamma(n + 1.0) for n in range(N + 1)])
    log_multinomial = 0.5 * (log_fact[N] - log_fact[occ].sum(axis=1))

    mag = np.abs(alpha)
    zero = mag == 0.0
    with np.errstate(divide="ignore"):
        log_mag = np.where(zero, 0.0, np.log(np.where(zero, 1.0, mag)))
    # A mode with zero amplitude kills every state that occupies it.
    dead = (occ[:, zero] > 0).any(axis=1)
    log_amp = log_multinomial + occ @ log_mag
    phase = occ @ np.angle(alpha)
    amps = np.where(dead, 0.0, np.exp(log_amp + 1j * phase))
    return StateVector.normalized(basis, amps)


def haar_random_state(basis: FockBasis, rng: np.random.Generator) -> StateVector:
    """Normalized vector of i.i.d. standard complex Gaussians (Haar-distributed)."""
    z = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return StateVector.normalized(basis, z)
