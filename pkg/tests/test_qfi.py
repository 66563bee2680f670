import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosemc.basis import enumerate_basis
from bosemc.moments import qfi_statistics
from bosemc.propagation import StateVector
from bosemc.qfi import (
    coherent_state,
    fock_state,
    ghz_state,
    haar_random_state,
    heisenberg_limit,
    initial_state,
    qfi,
)


def test_fock_states_have_zero_qfi():
    b = enumerate_basis(4, 4)
    for occ in b.states[::5]:
        assert qfi(fock_state(b, occ)) == 0.0


def test_ghz_examples():
    assert qfi(ghz_state(enumerate_basis(4, 4))) == pytest.approx(144, rel=1e-12)
    for phase in (0.0, 0.4, np.pi):
        assert qfi(ghz_state(enumerate_basis(2, 2), phase)) == pytest.approx(4, rel=1e-12)


@pytest.mark.parametrize("N,L", [(1, 2), (7, 3), (200, 3), (30, 5), (20, 10), (3, 10)])
def test_ghz_reaches_heisenberg_limit(N, L):
    F = qfi(ghz_state(enumerate_basis(N, L)))
    assert abs(F - heisenberg_limit(N, L)) <= 1e-9 * heisenberg_limit(N, L)


def test_ghz_rejects_degenerate_systems():
    with pytest.raises(ValueError):
        ghz_state(enumerate_basis(3, 1))
    with pytest.raises(ValueError):
        ghz_state(enumerate_basis(0, 3))


def test_equal_superposition_example():
    b = enumerate_basis(1, 2)
    assert qfi(StateVector(b, np.array([1, 1]) / np.sqrt(2))) == pytest.approx(1.0, abs=1e-15)


def test_initial_state():
    b = enumerate_basis(5, 4)
    psi = initial_state(b)
    (support,) = np.flatnonzero(psi.amplitudes)
    assert b.states[support] == (5, 0, 0, 0)
    assert qfi(psi) == 0.0
    (k,) = np.flatnonzero(fock_state(b, (1, 2, 0, 2)).amplitudes)
    assert b.states[k] == (1, 2, 0, 2)


def test_fock_state_validation():
    b = enumerate_basis(3, 3)
    for bad in [(1, 1), (2, 2, 0), (4, -1, 0)]:
        with pytest.raises(ValueError):
            fock_state(b, bad)


def test_coherent_state_examples():
    b = enumerate_basis(2, 2)
    a = coherent_state(b, [1 / np.sqrt(2), 1 / np.sqrt(2)]).amplitudes
    np.testing.assert_allclose(a, [0.5, 1 / np.sqrt(2), 0.5], atol=1e-15)
    a = coherent_state(enumerate_basis(6, 3), [1, 0, 0]).amplitudes
    assert a[0] == pytest.approx(1) and np.all(a[1:] == 0)
    alpha = np.array([0.3, -0.4j, 0.5 + 0.2j, 0.1])
    alpha /= np.linalg.norm(alpha)
    np.testing.assert_allclose(coherent_state(enumerate_basis(1, 4), alpha).amplitudes, alpha)


def test_coherent_state_is_at_shot_noise():
    # uniform product state: QFI = N * Var_single(i) * 4
    N, L = 12, 3
    F = qfi(coherent_state(enumerate_basis(N, L), np.ones(L)))
    i = np.arange(1, L + 1)
    assert F == pytest.approx(4 * N * (np.mean(i**2) - np.mean(i) ** 2), rel=1e-10)


def test_raw_amplitudes_need_tilt():
    with pytest.raises(ValueError):
        qfi(np.array([1.0, 0.0]))


def test_haar_state_single_dimension():
    psi = haar_random_state(enumerate_basis(0, 4), np.random.default_rng(0))
    assert abs(psi.amplitudes[0]) == pytest.approx(1.0)


def test_haar_probability_moments():
    b = enumerate_basis(2, 3)
    d, M = b.dim, 10_000
    rng = np.random.default_rng(123)
    p = np.array([haar_random_state(b, rng).probabilities for _ in range(M)])
    assert abs(p.mean() - 1 / d) <= 5 / np.sqrt(M) / d
    p2 = (p**2).mean(axis=0)
    se = (p**2).std(axis=0).max() / np.sqrt(M)
    assert np.all(np.abs(p2 - 2 / (d * (d + 1))) <= 5 * se)


def test_haar_qfi_mean_converges_to_exact():
    N, L, M = 3, 3, 4000
    stats = qfi_statistics(N, L)
    b = enumerate_basis(N, L)
    rng = np.random.default_rng(77)
    F = np.array([qfi(haar_random_state(b, rng)) for _ in range(M)])
    assert abs(F.mean() - stats.mean_exact) <= 4 * stats.std_exact / np.sqrt(M)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2, 2), (3, 3), (4, 2), (2, 5), (5, 4)]), st.integers(0, 2**32 - 1))
def test_qfi_bounds_and_phase_invariance(system, seed):
    N, L = system
    b = enumerate_basis(N, L)
    rng = np.random.default_rng(seed)
    for _ in range(40):
        psi = haar_random_state(b, rng)
        F = qfi(psi)
        assert 0.0 <= F <= heisenberg_limit(N, L) + 1e-9
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, b.dim))
        assert qfi(psi.amplitudes * phases, b.tilt_values) == pytest.approx(F, abs=1e-12 * max(F, 1))
