from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosemc.basis import (
    CapacityError,
    block_width,
    dimension,
    enumerate_basis,
    pair_hop_blocks,
    tilt_values,
)
from bosemc.verify import block_table_errors, corrupt_blocks

small_systems = st.tuples(st.integers(0, 9), st.integers(1, 6))


def test_dimension_examples():
    assert dimension(4, 4) == 35
    assert dimension(3, 3) == 10
    assert all(dimension(N, 1) == 1 for N in range(50))
    assert dimension(0, 7) == 1


def test_dimension_overflow_is_an_error():
    with pytest.raises(CapacityError):
        dimension(300, 12)
    with pytest.raises(CapacityError):
        enumerate_basis(200, 6)


def test_enumeration_refuses_huge_bases():
    with pytest.raises(CapacityError):
        enumerate_basis(40, 8, max_dim=1000)


def test_small_bases():
    assert enumerate_basis(0, 3).states == [(0, 0, 0)]
    assert enumerate_basis(2, 2).states == [(2, 0), (1, 1), (0, 2)]
    b = enumerate_basis(3, 3)
    assert b.states[0] == (3, 0, 0) and b.states[-1] == (0, 0, 3)
    assert b.states == sorted(b.states, reverse=True)


def test_tilt_examples():
    np.testing.assert_array_equal(tilt_values(enumerate_basis(1, 2)), [1, 2])
    np.testing.assert_array_equal(tilt_values(enumerate_basis(2, 2)), [2, 3, 4])
    b = enumerate_basis(4, 4)
    assert b.tilt_values[b.index_of((4, 0, 0, 0))] == 4
    assert b.tilt_values[b.index_of((0, 0, 0, 4))] == 16


def test_index_of_rejects_foreign_occupations():
    b = enumerate_basis(2, 3)
    with pytest.raises(ValueError):
        b.index_of((1, 1, 1))


@settings(max_examples=60, deadline=None)
@given(small_systems)
def test_basis_invariants(system):
    N, L = system
    b = enumerate_basis(N, L)
    assert b.dim == comb(N + L - 1, N) == len(set(b.states))
    assert np.all(b.occupations.sum(axis=1) == N)
    assert np.all(b.occupations >= 0)
    for k, state in enumerate(b.states):
        assert b.index_of(state) == k
    s = b.tilt_values
    if N > 0:
        assert s.min() == N and s.max() == N * L
        assert np.flatnonzero(s == N).tolist() == [0]
        assert np.flatnonzero(s == N * L).tolist() == [b.dim - 1]


def test_block_shapes_examples():
    blocks = pair_hop_blocks(enumerate_basis(2, 3), 1)
    assert [X.shape for X in blocks.blocks] == [(1, 1), (2, 1), (3, 1)]
    blocks = pair_hop_blocks(enumerate_basis(2, 2), 1)
    assert [X.size for X in blocks.blocks[:2]] == [0, 0]
    assert blocks.block(2).shape == (3, 1)


def test_block_bond_validation():
    b = enumerate_basis(3, 3)
    for bond in (0, 3):
        with pytest.raises(ValueError):
            pair_hop_blocks(b, bond)
    with pytest.raises(ValueError):
        pair_hop_blocks(enumerate_basis(3, 1), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 9), st.integers(2, 6), st.data())
def test_block_invariants(N, L, data):
    bond = data.draw(st.integers(1, L - 1))
    b = enumerate_basis(N, L)
    blocks = pair_hop_blocks(b, bond)
    assert block_table_errors(b, blocks) == []
    for r in range(N + 1):
        assert blocks.block(r).shape[1] == block_width(N, L, r)
    assert sum((r + 1) * block_width(N, L, r) for r in range(N + 1)) == b.dim


def test_block_count_identity_exact():
    for N in range(0, 60, 7):
        for L in range(2, 12):
            # C(-1, 0) = 1 covers the L = 2 edge case
            K = [1 if N - r == 0 else comb(N - r + L - 3, N - r) for r in range(N + 1)]
            assert sum((r + 1) * k for r, k in enumerate(K)) == comb(N + L - 1, L - 1)


def test_corrupted_table_is_detected():
    b = enumerate_basis(4, 4)
    problems = block_table_errors(b, corrupt_blocks(pair_hop_blocks(b, 2)))
    assert problems and "r=4" in problems[0]
