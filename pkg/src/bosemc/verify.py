"""Self-verification checks run by ``bosemc verify``.

Each check returns a :class:`CheckResult`; a check that raises is reported
as a failure carrying the exception text.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels
from .basis import PairHopBlocks, dimension, enumerate_basis, pair_hop_blocks
from .dense import dense_evolve
from .moments import (
    brute_force_qfi_moments,
    brute_force_tilt_power_sum,
    qfi_mean_fraction,
    qfi_second_moment_fraction,
    qfi_variance_closed_fraction,
    qfi_variance_routes,
    tilt_power_sum,
)
from .propagation import ControlTrajectory, HopSpectra, PropagationTables, evolve
from .qfi import ghz_state, haar_random_state, heisenberg_limit, initial_state, qfi


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_trajectory(rng, total_time, n_steps, n_modes) -> ControlTrajectory:
    return ControlTrajectory(
        total_time,
        n_steps,
        rng.uniform(0, 1, (n_steps, n_modes - 1)),
        rng.uniform(-1, 1, (n_steps, n_modes)),
        rng.uniform(-1, 1, (n_steps, n_modes)),
    )


def corrupt_blocks(blocks: PairHopBlocks) -> PairHopBlocks:
    """Copy of ``blocks`` with two entries of the largest block swapped (fault injection)."""
    flat = blocks.flat.copy()
    r = blocks.n_particles
    start = int(blocks.offsets[r])
    flat[start], flat[start + 1] = flat[start + 1], flat[start]
    return replace(blocks, flat=flat)


def block_table_errors(basis, blocks: PairHopBlocks) -> list[str]:
    """Semantic problems with a block table, read back from the basis occupations."""
    errors = []
    if not np.array_equal(np.sort(blocks.flat), np.arange(basis.dim)):
        errors.append("blocks do not partition the basis indices")
        return errors
    i = blocks.bond_index - 1
    occ = basis.occupations
    for r in range(basis.n_particles + 1):
        X = blocks.block(r)
        if X.size == 0:
            continue
        sub = occ[X]  # (r+1, K, L)
        s = np.arange(r + 1)[:, None]
        if not (np.all(sub[:, :, i] == s) and np.all(sub[:, :, i + 1] == r - s)):
            errors.append(f"block r={r}: row occupations do not match (s, r-s)")
        others = np.delete(sub, [i, i + 1], axis=2)
        if not np.all(others == others[:1]):
            errors.append(f"block r={r}: columns mix different spectator configurations")
    return errors


# -- individual checks ----------------------------------------------------------


def check_dimension(quick: bool) -> str:
    assert dimension(4, 4) == 35, "dimension(4, 4) != 35"
    n_max = 8 if quick else 20
    for N in range(n_max + 1):
        for L in range(1, 7):
            b = enumerate_basis(N, L)
            assert b.dim == dimension(N, L), f"basis size wrong at N={N}, L={L}"
            assert np.all(b.occupations.sum(axis=1) == N)
            assert len(set(b.states)) == b.dim, f"duplicate states at N={N}, L={L}"
    return f"N <= {n_max}, L <= 6"


def check_power_sums(quick: bool) -> str:
    n_max = 8 if quick else 20
    for N in range(n_max + 1):
        for L in range(1, 7):
            b = enumerate_basis(N, L)
            for k in (1, 2, 3, 4):
                closed, brute = tilt_power_sum(N, L, k), brute_force_tilt_power_sum(b, k)
                assert closed == brute, f"S_{k}({N},{L}): closed {closed} != brute {brute}"
    return f"S_1..S_4 exact on N <= {n_max}, L <= 6"


def check_moments(quick: bool) -> str:
    assert qfi_mean_fraction(1, 2) == Fraction(2, 3)
    assert qfi_variance_closed_fraction(1, 2) == Fraction(4, 45)
    for N, L in [(1, 2), (2, 2), (1, 3), (2, 3), (3, 2)]:
        mean, second = brute_force_qfi_moments(enumerate_basis(N, L))
        assert mean == qfi_mean_fraction(N, L), f"mean mismatch at N={N}, L={L}"
        assert second == qfi_second_moment_fraction(N, L), f"second moment mismatch at N={N}, L={L}"
    n_max, l_max = (30, 6) if quick else (100, 10)
    worst = 0.0
    for N in range(1, n_max + 1):
        for L in range(2, l_max + 1):
            a, b = qfi_variance_routes(N, L)
            worst = max(worst, abs(a - b) / abs(a))
    assert worst <= 1e-10, f"variance routes differ by {worst:.3e}"
    return f"variance routes agree to {worst:.1e} on N <= {n_max}, L <= {l_max}"


def check_ghz(quick: bool) -> str:
    cases = [(4, 4), (20, 10)] if quick else [(4, 4), (200, 3), (20, 10)]
    for N, L in cases:
        F = qfi(ghz_state(enumerate_basis(N, L)))
        hl = heisenberg_limit(N, L)
        assert abs(F - hl) <= 1e-9 * hl, f"GHZ QFI {F} != {hl} at N={N}, L={L}"
    return "GHZ reaches N^2 (L-1)^2 for " + ", ".join(f"({N},{L})" for N, L in cases)


def _dense_agreement(fault: bool, seed: int = 11) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for N, L in [(3, 3), (4, 4), (2, 5)]:
        basis = enumerate_basis(N, L)
        tables = None
        if fault:
            from .basis import all_pair_hop_blocks

            blocks = all_pair_hop_blocks(basis)
            blocks[1] = corrupt_blocks(blocks[1])
            tables = PropagationTables(basis, blocks, HopSpectra.build(N))
        for _ in range(2):
            traj = random_trajectory(rng, 3.0, 6, L)
            start = haar_random_state(basis, rng)
            out = evolve(start, traj, tables)
            ref = dense_evolve(start.amplitudes, basis, traj)
            worst = max(worst, float(np.max(np.abs(out.amplitudes - ref))))
    assert worst <= 1e-8, f"max amplitude error {worst:.3e} exceeds 1e-8"
    return f"max amplitude error {worst:.1e}"


def check_block_tables(fault: bool) -> str:
    for N, L in [(4, 4), (5, 3), (3, 5), (6, 2)]:
        basis = enumerate_basis(N, L)
        for bond in range(1, L):
            blocks = pair_hop_blocks(basis, bond)
            if fault and bond == 1:
                blocks = corrupt_blocks(blocks)
            problems = block_table_errors(basis, blocks)
            assert not problems, f"N={N}, L={L}, bond {bond}: {problems[0]}"
    return "row/column semantics verified"


def check_norm(quick: bool) -> str:
    N, L, n = (40, 3, 20) if quick else (200, 3, 20)
    rng = np.random.default_rng(5)
    basis = enumerate_basis(N, L)
    worst = 0.0
    for _ in range(2):
        out = evolve(initial_state(basis), random_trajectory(rng, 20.0, n, L))
        worst = max(worst, abs(out.norm_squared() - 1.0))
    assert worst <= 1e-9, f"norm drift {worst:.3e}"
    return f"norm drift {worst:.1e} at N={N}, L={L}, n={n}"


def check_backends() -> str:
    if "compiled" not in kernels.BACKENDS:
        return "compiled kernels not built; python backend only"
    rng = np.random.default_rng(3)
    basis = enumerate_basis(12, 4)
    start = haar_random_state(basis, rng)
    traj = random_trajectory(rng, 10.0, 8, 4)
    a = evolve(start, traj, backend="compiled").amplitudes
    b = evolve(start, traj, backend="python").amplitudes
    err = float(np.max(np.abs(a - b)))
    assert err <= 1e-12, f"backends differ by {err:.3e}"
    return f"compiled and python kernels agree to {err:.1e}"


def run_checks(quick: bool = False, inject_fault: bool = False) -> list[CheckResult]:
    checks = [
        ("dimension", lambda: check_dimension(quick)),
        ("power_sums", lambda: check_power_sums(quick)),
        ("exact_moments", lambda: check_moments(quick)),
        ("ghz_qfi", lambda: check_ghz(quick)),
        ("block_tables", lambda: check_block_tables(inject_fault)),
        ("dense_propagator", lambda: _dense_agreement(inject_fault)),
        ("norm_conservation", lambda: check_norm(quick)),
        ("backend_agreement", check_backends),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            detail = fn()
            passed = True
        except Exception as exc:  # reported, not raised
            detail = f"{type(exc).__name__}: {exc}"
            passed = False
        results.append(CheckResult(name, passed, detail, time.perf_counter() - t0))
    return results
