"""Trotterized evolution under the three-layer Bose-Hubbard control sequence.

Each control step ``k`` applies, in order, the diagonal layer
``sum_i D_i n_i + U_i n_i (n_i - 1)``, the even hop layer on bonds
(2,3), (4,5), ... and the odd hop layer on bonds (1,2), (3,4), ...
(1-based sites).  Hops are applied block by block on the pair-occupancy
subspaces of each bond, never through a full d x d matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import kernels
from .basis import FockBasis, PairHopBlocks, all_pair_hop_blocks

NORM_TOL = 1e-10
# Evolved states are checked, never renormalized; roundoff may accumulate up to this.
EVOLVED_NORM_TOL = 1e-9

HOP_RANGE = (0.0, 1.0)
DETUNING_RANGE = (-1.0, 1.0)
INTERACTION_RANGE = (-1.0, 1.0)

ODD = "odd"
EVEN = "even"


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray
    tol: float = field(default=NORM_TOL, repr=False)

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > self.tol:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, basis: FockBasis, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(basis, amps / norm)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class ControlTrajectory:
    """One candidate preparation sequence.

    ``hop_strengths`` is ``n x (L-1)`` (column ``i-1`` drives bond
    ``(i, i+1)``); ``detunings`` and ``interactions`` are ``n x L``.
    Times are in units of the inverse typical hopping rate.
    """

    total_time: float
    n_steps: int
    hop_strengths: np.ndarray
    detunings: np.ndarray
    interactions: np.ndarray
    ranges: dict = field(
        default_factory=lambda: {
            "hop": HOP_RANGE,
            "detuning": DETUNING_RANGE,
            "interaction": INTERACTION_RANGE,
        }
    )

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not np.isfinite(self.total_time) or self.total_time < 0:
            raise ValueError(f"total_time must be finite and non-negative, got {self.total_time!r}")
        J = np.array(self.hop_strengths, dtype=np.float64)
        D = np.array(self.detunings, dtype=np.float64)
        U = np.array(self.interactions, dtype=np.float64)
        n = self.n_steps
        if D.ndim != 2 or D.shape[0] != n or U.shape != D.shape:
            raise ValueError(f"detunings/interactions must both be ({n}, L), got {D.shape}, {U.shape}")
        L = D.shape[1]
        if J.shape != (n, L - 1):
            raise ValueError(f"hop_strengths must be ({n}, {L - 1}), got {J.shape}")
        for name, arr in (("hop", J), ("detuning", D), ("interaction", U)):
            lo, hi = self.ranges[name]
            if arr.size and (arr.min() < lo or arr.max() > hi or not np.all(np.isfinite(arr))):
                raise ValueError(f"{name} controls outside [{lo}, {hi}]")
            arr.setflags(write=False)
        object.__setattr__(self, "hop_strengths", J)
        object.__setattr__(self, "detunings", D)
        object.__setattr__(self, "interactions", U)

    @property
    def n_modes(self) -> int:
        return self.detunings.shape[1]

    @property
    def dt(self) -> float:
        return self.total_time / (3 * self.n_steps)

    @classmethod
    def zeros(cls, total_time: float, n_steps: int, n_modes: int) -> "ControlTrajectory":
        return cls(
            total_time,
            n_steps,
            np.zeros((n_steps, n_modes - 1)),
            np.zeros((n_steps, n_modes)),
            np.zeros((n_steps, n_modes)),
        )

    def to_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "n_steps": self.n_steps,
            "dt": self.dt,
            "hop_strengths": self.hop_strengths.tolist(),
            "detunings": self.detunings.tolist(),
            "interactions": self.interactions.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlTrajectory":
        return cls(
            data["total_time"],
            data["n_steps"],
            np.asarray(data["hop_strengths"], dtype=np.float64).reshape(data["n_steps"], -1),
            data["detunings"],
            data["interactions"],
        )


# -- two-mode hop algebra ---------------------------------------------------


def two_mode_hop_generator(r: int) -> np.ndarray:
    """Matrix of ``a1^+ a2 + a2^+ a1`` on ``|s, r-s>``, s = 0..r."""
    M = np.zeros((r + 1, r + 1))
    s = np.arange(r)
    off = np.sqrt((s + 1.0) * (r - s))
    M[s, s + 1] = off
    M[s + 1, s] = off
    return M


@lru_cache(maxsize=None)
def hop_eigensystem(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and orthonormal eigenvectors (columns) of the r-boson hop generator."""
    if r == 0:
        return np.zeros(1), np.ones((1, 1))
    s = np.arange(r)
    evals, evecs = eigh_tridiagonal(np.zeros(r + 1), np.sqrt((s + 1.0) * (r - s)))
    evals.setflags(write=False)
    evecs = np.ascontiguousarray(evecs)
    evecs.setflags(write=False)
    return evals, evecs


def block_unitary(r: int, J: float, dt: float) -> np.ndarray:
    """``exp(-i dt J M_r)`` from the eigendecomposition of the hop generator."""
    if J * dt == 0.0:
        return np.eye(r + 1, dtype=np.complex128)
    evals, V = hop_eigensystem(r)
    return (V * np.exp(-1j * dt * J * evals)) @ V.T


@dataclass(frozen=True, eq=False)
class HopSpectra:
    """Flattened eigensystems for r = 0..N in the layout the kernels read."""

    vecs: np.ndarray
    vecs_t: np.ndarray
    vec_offsets: np.ndarray
    evals: np.ndarray
    eval_offsets: np.ndarray

    @classmethod
    def build(cls, n_particles: int) -> "HopSpectra":
        systems = [hop_eigensystem(r) for r in range(n_particles + 1)]
        vecs = np.concatenate([V.ravel() for _, V in systems])
        vecs_t = np.concatenate([V.T.ravel() for _, V in systems])
        evals = np.concatenate([e for e, _ in systems])
        r = np.arange(n_particles + 1, dtype=np.int64)
        vec_offsets = np.concatenate([[0], np.cumsum((r + 1) ** 2)[:-1]]).astype(np.int64)
        eval_offsets = np.concatenate([[0], np.cumsum(r + 1)[:-1]]).astype(np.int64)
        return cls(vecs, vecs_t, vec_offsets, evals, eval_offsets)


@dataclass(frozen=True, eq=False)
class PropagationTables:
    """Immutable per-basis tables shared by every evolution on that basis."""

    basis: FockBasis
    blocks: dict[int, PairHopBlocks]
    spectra: HopSpectra


def propagation_tables(basis: FockBasis) -> PropagationTables:
    """Build (once per basis object) the block and spectrum tables."""
    tables = basis.__dict__.get("_propagation_tables")
    if tables is None:
        tables = PropagationTables(
            basis, all_pair_hop_blocks(basis), HopSpectra.build(basis.n_particles)
        )
        object.__setattr__(basis, "_propagation_tables", tables)
    return tables


def layer_bonds(n_modes: int, parity: str, swap_parity: bool = False) -> list[int]:
    """Bond indices of a hop layer: odd -> 1, 3, ...; even -> 2, 4, ..."""
    if parity not in (ODD, EVEN):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    if swap_parity:
        parity = EVEN if parity == ODD else ODD
    first = 1 if parity == ODD else 2
    return list(range(first, n_modes, 2))


# -- in-place primitives on raw amplitude buffers ---------------------------


def _hop_inplace(psi, blocks: PairHopBlocks, spectra: HopSpectra, theta: float, backend) -> None:
    backend.apply_bond_hop(
        psi,
        blocks.flat,
        blocks.offsets,
        blocks.widths,
        spectra.vecs,
        spectra.vecs_t,
        spectra.vec_offsets,
        spectra.evals,
        spectra.eval_offsets,
        float(theta),
    )


# -- public layer operations --------------------------------------------------


def apply_diagonal_layer(state: StateVector, detunings_row, interactions_row, dt: float,
                         backend: str | None = None) -> StateVector:
    psi = state.amplitudes.copy()
    kernels.get_backend(backend).apply_diagonal(
        psi,
        state.basis.occupations,
        np.ascontiguousarray(detunings_row, dtype=np.float64),
        np.ascontiguousarray(interactions_row, dtype=np.float64),
        float(dt),
    )
    return StateVector(state.basis, psi, EVOLVED_NORM_TOL)


def _check_blocks(state: StateVector, blocks: PairHopBlocks) -> None:
    basis = state.basis
    if (blocks.n_particles, blocks.n_modes) != (basis.n_particles, basis.n_modes) or \
            blocks.offsets[-1] != basis.dim:
        raise ValueError("pair-hop blocks were built for a different basis")


def apply_bond_hop(state: StateVector, blocks: PairHopBlocks, J: float, dt: float,
                   backend: str | None = None) -> StateVector:
    """``exp(-i dt J (a_b^+ a_{b+1} + h.c.))`` on the bond the blocks describe."""
    _check_blocks(state, blocks)
    psi = state.amplitudes.copy()
    spectra = propagation_tables(state.basis).spectra
    _hop_inplace(psi, blocks, spectra, J * dt, kernels.get_backend(backend))
    return StateVector(state.basis, psi, EVOLVED_NORM_TOL)


def apply_hop_layer(state: StateVector, blocks_for_layer, J_layer, dt: float, parity: str,
                    backend: str | None = None) -> StateVector:
    """Apply the commuting hops of one parity layer.

    ``J_layer[j]`` is the strength on ``blocks_for_layer[j]``; every bond
    must belong to the requested parity.
    """
    blocks_for_layer = list(blocks_for_layer)
    J_layer = np.atleast_1d(np.asarray(J_layer, dtype=np.float64))
    if J_layer.shape != (len(blocks_for_layer),):
        raise ValueError(
            f"layer has {len(blocks_for_layer)} bonds but {J_layer.shape[0]} hop strengths"
        )
    allowed = set(layer_bonds(state.basis.n_modes, parity))
    for blocks in blocks_for_layer:
        if blocks.bond_index not in allowed:
            raise ValueError(f"bond {blocks.bond_index} is not in the {parity} layer")
        _check_blocks(state, blocks)
    psi = state.amplitudes.copy()
    spectra = propagation_tables(state.basis).spectra
    be = kernels.get_backend(backend)
    for blocks, J in zip(blocks_for_layer, J_layer):
        _hop_inplace(psi, blocks, spectra, J * dt, be)
    return StateVector(state.basis, psi, EVOLVED_NORM_TOL)


def evolve_amplitudes(psi: np.ndarray, traj: ControlTrajectory, tables: PropagationTables,
                      backend: str | None = None, swap_parity: bool = False) -> np.ndarray:
    """Run the full control sequence on a raw amplitude buffer, in place."""
    basis = tables.basis
    L = basis.n_modes
    if traj.n_modes != L:
        raise ValueError(f"trajectory is for {traj.n_modes} modes, basis has {L}")
    if psi.shape != (basis.dim,) or psi.dtype != np.complex128 or not psi.flags.c_contiguous:
        raise ValueError("amplitude buffer must be a contiguous complex128 vector of length d")
    be = kernels.get_backend(backend)
    dt = traj.dt
    even = [tables.blocks[b] for b in layer_bonds(L, EVEN, swap_parity)]
    odd = [tables.blocks[b] for b in layer_bonds(L, ODD, swap_parity)]
    occ = basis.occupations
    spectra = tables.spectra
    for k in range(traj.n_steps):
        be.apply_diagonal(psi, occ, traj.detunings[k], traj.interactions[k], dt)
        J = traj.hop_strengths[k]
        for blocks in even:
            _hop_inplace(psi, blocks, spectra, J[blocks.bond_index - 1] * dt, be)
        for blocks in odd:
            _hop_inplace(psi, blocks, spectra, J[blocks.bond_index - 1] * dt, be)
    return psi


def evolve(initial: StateVector, traj: ControlTrajectory,
           blocks_cache: PropagationTables | None = None,
           backend: str | None = None, swap_parity: bool = False) -> StateVector:
    """Final state of the control sequence.  No renormalization is applied."""
    tables = blocks_cache if blocks_cache is not None else propagation_tables(initial.basis)
    if tables.basis is not initial.basis and (
        tables.basis.n_particles, tables.basis.n_modes
    ) != (initial.basis.n_particles, initial.basis.n_modes):
        raise ValueError("propagation tables were built for a different basis")
    psi = initial.amplitudes.copy()
    evolve_amplitudes(psi, traj, tables, backend=backend, swap_parity=swap_parity)
    return StateVector(initial.basis, psi, EVOLVED_NORM_TOL)
