"""Occupation-number basis for N bosons in L modes.

States are ordered descending-lexicographically, so ``(N, 0, ..., 0)`` is
index 0 and ``(0, ..., 0, N)`` is index ``d - 1``.  Site labels are 1-based
wherever they enter a formula (tilt values, bond indices).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

INDEX_MAX = int(np.iinfo(np.int64).max)

# Enumeration materializes a (d, L) array plus a dict; refuse anything larger.
DEFAULT_MAX_ENUMERATE = 50_000_000


class CapacityError(ValueError):
    """Raised when a combinatorial count does not fit the index type or memory budget."""


def dimension(n_particles: int, n_modes: int) -> int:
    """Exact Hilbert-space dimension ``C(N + L - 1, N)``.

    Raises
    ------
    CapacityError
        If the dimension does not fit a signed 64-bit index.
    """
    _check_sizes(n_particles, n_modes)
    d = comb(n_particles + n_modes - 1, n_particles)
    if d > INDEX_MAX:
        raise CapacityError(
            f"dimension C({n_particles + n_modes - 1}, {n_particles}) = {d} "
            f"exceeds the int64 index range"
        )
    return d


def block_width(n_particles: int, n_modes: int, pair_occupancy: int) -> int:
    """Number of columns K_r of the pair-hop block with ``r`` bosons on the bond.

    This is the number of ways to put ``N - r`` bosons into the remaining
    ``L - 2`` modes.
    """
    rest = n_particles - pair_occupancy
    others = n_modes - 2
    if rest < 0:
        return 0
    if others == 0:
        return 1 if rest == 0 else 0
    return comb(rest + others - 1, rest)


def _check_sizes(n_particles: int, n_modes: int) -> None:
    if int(n_particles) != n_particles or n_particles < 0:
        raise ValueError(f"particle count must be a non-negative integer, got {n_particles!r}")
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError(f"mode count must be a positive integer, got {n_modes!r}")


def _occupations(n_particles: int, n_modes: int) -> np.ndarray:
    """All occupation vectors, descending lexicographic, as an int64 array."""
    # Build column by column: table[m][n] holds the states of n bosons in the last m modes.
    table = {1: [np.array([[n]], dtype=np.int64) for n in range(n_particles + 1)]}
    for m in range(2, n_modes + 1):
        row = []
        for n in range(n_particles + 1):
            parts = []
            for first in range(n, -1, -1):
                tail = table[m - 1][n - first]
                head = np.full((tail.shape[0], 1), first, dtype=np.int64)
                parts.append(np.hstack([head, tail]))
            row.append(np.vstack(parts))
        table[m] = row
        del table[m - 1]
    return table[n_modes][n_particles]


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Enumerated Fock basis with an index map and tilt eigenvalues."""

    n_particles: int
    n_modes: int
    occupations: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    @cached_property
    def states(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in row) for row in self.occupations]

    @cached_property
    def index_map(self) -> dict[tuple[int, ...], int]:
        return {state: k for k, state in enumerate(self.states)}

    @cached_property
    def tilt_values(self) -> np.ndarray:
        return tilt_values(self)

    def index_of(self, occupation) -> int:
        key = tuple(int(x) for x in occupation)
        try:
            return self.index_map[key]
        except KeyError:
            raise ValueError(
                f"{key} is not a state of {self.n_particles} bosons in {self.n_modes} modes"
            ) from None

    def __len__(self) -> int:
        return self.dim


def enumerate_basis(
    n_particles: int, n_modes: int, max_dim: int = DEFAULT_MAX_ENUMERATE
) -> FockBasis:
    d = dimension(n_particles, n_modes)
    if d > max_dim:
        raise CapacityError(f"dimension {d} exceeds the enumeration limit {max_dim}")
    occ = _occupations(n_particles, n_modes)
    occ.setflags(write=False)
    return FockBasis(n_particles, n_modes, occ)


def tilt_values(basis: FockBasis) -> np.ndarray:
    """Tilt eigenvalues ``s = sum_i i * n_i`` with 1-based site labels."""
    sites = np.arange(1, basis.n_modes + 1, dtype=np.int64)
    s = (basis.occupations @ sites).astype(np.float64)
    s.setflags(write=False)
    return s


@dataclass(frozen=True, eq=False)
class PairHopBlocks:
    """Block index tables for the hop on bond ``(bond, bond + 1)``.

    ``blocks[r]`` has shape ``(r + 1, K_r)``; row ``s`` holds the basis
    indices with ``n_bond = s`` and ``n_{bond+1} = r - s``, and every column
    shares one assignment of the other modes (ascending lexicographic).

    ``flat`` is the row-major concatenation of all blocks and ``offsets[r]``
    is where block ``r`` starts in it; the compiled kernels read those.
    """

    bond_index: int
    n_particles: int
    n_modes: int
    flat: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.block(r) for r in range(self.n_particles + 1)]

    def block(self, r: int) -> np.ndarray:
        start, stop = self.offsets[r], self.offsets[r + 1]
        return self.flat[start:stop].reshape(r + 1, int(self.widths[r]))


def pair_hop_blocks(basis: FockBasis, bond: int) -> PairHopBlocks:
    """Partition the basis by the occupancy of bond ``(bond, bond + 1)``, 1-based."""
    L, N = basis.n_modes, basis.n_particles
    if L < 2:
        raise ValueError("pair-hop blocks need at least two modes")
    if int(bond) != bond or not 1 <= bond <= L - 1:
        raise ValueError(f"bond index must be in [1, {L - 1}], got {bond!r}")
    i = bond - 1
    occ = basis.occupations
    left = occ[:, i]
    pair = left + occ[:, i + 1]
    others = np.delete(occ, [i, i + 1], axis=1)
    # np.lexsort: last key is primary -> order by (r, n_i, others ascending).
    keys = [others[:, c] for c in range(others.shape[1] - 1, -1, -1)] + [left, pair]
    order = np.lexsort(keys).astype(np.int64)

    widths = np.array([block_width(N, L, r) for r in range(N + 1)], dtype=np.int64)
    sizes = (np.arange(N + 1, dtype=np.int64) + 1) * widths
    offsets = np.zeros(N + 2, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    if offsets[-1] != basis.dim:
        raise AssertionError("pair-hop blocks do not cover the basis")
    order.setflags(write=False)
    offsets.setflags(write=False)
    widths.setflags(write=False)
    return PairHopBlocks(bond, N, L, order, offsets, widths)


def all_pair_hop_blocks(basis: FockBasis) -> dict[int, PairHopBlocks]:
    """Blocks for every bond ``1 .. L-1``, keyed by bond index."""
    return {b: pair_hop_blocks(basis, b) for b in range(1, basis.n_modes)}
