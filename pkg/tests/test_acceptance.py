"""Acceptance gate: one test per criterion, summarised at the end of the run."""

from math import comb

import numpy as np
import pytest

from bosemc.basis import dimension, enumerate_basis
from bosemc.dense import dense_evolve
from bosemc.moments import (
    brute_force_tilt_power_sum,
    cantelli_lower,
    cantelli_upper,
    qfi_mean_exact,
    qfi_statistics,
    qfi_variance_exact,
    qfi_variance_routes,
    tilt_power_sum,
)
from bosemc.montecarlo import OptimizationConfig, haar_qfi_samples, optimize, scan_evolution_time, tail_fraction
from bosemc.propagation import evolve
from bosemc.qfi import ghz_state, haar_random_state, heisenberg_limit, initial_state, qfi
from bosemc.verify import random_trajectory

criterion = pytest.mark.criterion


@criterion(1, "dimension and basis enumeration")
def test_dimension_and_basis(report):
    assert dimension(4, 4) == 35
    for N in range(21):
        for L in range(1, 7):
            b = enumerate_basis(N, L)
            assert b.dim == comb(N + L - 1, N) == dimension(N, L)
            assert len(set(b.states)) == b.dim
            assert np.all(b.occupations.sum(axis=1) == N)
    report("d(4,4)=35; N<=20, L<=6 exact")


@criterion(2, "GHZ state reaches the Heisenberg limit")
def test_ghz_heisenberg_limit(report):
    worst = 0.0
    for N, L in [(4, 4), (200, 3), (20, 10)]:
        F = qfi(ghz_state(enumerate_basis(N, L)))
        hl = heisenberg_limit(N, L)
        worst = max(worst, abs(F - hl) / hl)
        assert abs(F - hl) <= 1e-9 * hl
    assert qfi(ghz_state(enumerate_basis(4, 4))) == pytest.approx(144, rel=1e-9)
    report(f"max rel err {worst:.1e}")


@criterion(3, "tilt power sums equal brute-force enumeration")
def test_power_sums_oracle(report):
    assert [tilt_power_sum(2, 2, k) for k in (1, 2, 3, 4)] == [9, 29, 99, 353]
    for N in range(21):
        for L in range(1, 7):
            b = enumerate_basis(N, L)
            for k in (1, 2, 3, 4):
                assert tilt_power_sum(N, L, k) == brute_force_tilt_power_sum(b, k)
    report("N<=20, L<=6, k<=4 exact")


@criterion(4, "exact QFI mean and variance")
def test_exact_moments(report):
    assert qfi_mean_exact(1, 2) == pytest.approx(2 / 3, rel=1e-15)
    assert qfi_variance_exact(1, 2) == pytest.approx(4 / 45, rel=1e-15)
    worst = 0.0
    for N in range(1, 101):
        for L in range(2, 11):
            a, b = qfi_variance_routes(N, L)
            worst = max(worst, abs(a - b) / abs(a))
    assert worst <= 1e-10
    report(f"variance routes max rel diff {worst:.1e}")


@criterion(5, "Haar sampling matches exact statistics")
def test_haar_sampling(report):
    N, L, M = 4, 3, 10_000
    s = qfi_statistics(N, L)
    F = haar_qfi_samples(N, L, M, seed=20240501)
    mean_se = F.std(ddof=1) / np.sqrt(M)
    m4 = np.mean((F - F.mean()) ** 4)
    var_se = np.sqrt((m4 - F.var() ** 2) / M)
    z_mean = (F.mean() - s.mean_exact) / mean_se
    z_var = (F.var(ddof=1) - s.variance_exact) / var_se
    tail = tail_fraction(F, s.intermediate)
    report(f"z_mean={z_mean:+.2f}, z_var={z_var:+.2f}, tail={tail.probability:.3f}")
    assert abs(z_mean) <= 5 and abs(z_var) <= 5
    assert tail.probability >= 0.5 - 3 * tail.stderr


@criterion(6, "propagation matches the dense reference and conserves norm")
def test_propagation_oracle(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    for N, L in [(3, 3), (4, 4), (2, 5), (5, 3), (4, 5), (6, 4), (3, 8), (2, 19), (1, 12)]:
        b = enumerate_basis(N, L)
        assert b.dim <= 200
        for n in (1, 4, 10):
            psi0 = haar_random_state(b, rng)
            traj = random_trajectory(rng, rng.uniform(0.5, 20.0), n, L)
            out = evolve(psi0, traj)
            worst = max(worst, float(np.max(np.abs(out.amplitudes - dense_evolve(psi0.amplitudes, b, traj)))))
            assert abs(out.norm_squared() - 1) <= 1e-9
    assert worst <= 1e-8
    drift = 0.0
    for N in (10, 50, 100, 200):
        b = enumerate_basis(N, 3)
        for _ in range(3):
            out = evolve(initial_state(b), random_trajectory(rng, 20.0, 20, 3))
            drift = max(drift, abs(out.norm_squared() - 1))
    assert drift <= 1e-9
    report(f"dense max err {worst:.1e}, norm drift {drift:.1e}")


@criterion(7, "Monte-Carlo search beats SQL and reaches mu - sigma")
def test_intermediate_scaling(report):
    L, seeds = 3, range(20)
    counts = {}
    for N in (10, 20, 40):
        s = qfi_statistics(N, L)
        hits = 0
        for seed in seeds:
            res = optimize(OptimizationConfig(N, L, total_time=20.0, n_trials=10, seed=seed))
            assert res.best_qfi > s.sql, f"N={N}, seed={seed}: {res.best_qfi} <= SQL"
            hits += res.best_qfi >= s.intermediate
        counts[N] = hits
    report(", ".join(f"N={N}: {k}/20" for N, k in counts.items()))
    assert all(k >= 14 for k in counts.values())


@criterion(8, "optimized QFI rises with preparation time and plateaus near mu")
def test_time_scan(report):
    N, L = 20, 3
    mu = qfi_statistics(N, L).mean_exact
    template = OptimizationConfig(N, L, total_time=20.0, n_trials=10, seed=0)
    rows = {r.total_time: r.f_opt for r in scan_evolution_time(N, L, [0.5, 10.0, 20.0], template)}
    report(f"F(0.5)={rows[0.5]:.1f}, F(10)={rows[10.0]:.1f}, F(20)={rows[20.0]:.1f}, mu={mu:.1f}")
    assert rows[0.5] < 0.5 * rows[20.0]
    for T in (10.0, 20.0):
        assert mu / 2 <= rows[T] <= 2 * mu


@criterion(9, "Cantelli bounds hold for Haar samples")
def test_cantelli_validity(report):
    N, L, M = 4, 3, 10_000
    s = qfi_statistics(N, L)
    mu, sigma = s.mean_exact, s.std_exact
    F = haar_qfi_samples(N, L, M, seed=909)
    worst = -np.inf
    for k in np.linspace(0.1, 4.0, 40):
        above = tail_fraction(F, mu + k * sigma)
        worst = max(worst, above.probability - cantelli_upper(mu + k * sigma, mu, sigma) - 3 * above.stderr)
        below = tail_fraction(F, mu - k * sigma)
        worst = max(worst, cantelli_lower(mu - k * sigma, mu, sigma) - below.probability - 3 * below.stderr)
    report(f"largest violation margin {worst:+.3f} (must be <= 0)")
    assert worst <= 0
