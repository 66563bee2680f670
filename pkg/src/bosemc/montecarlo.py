"""Monte-Carlo search over random control trajectories, and Haar-sampling experiments.

Randomness is drawn from Philox streams keyed by ``(seed, stream, index)``
so every trial and every Haar sample is reproducible on its own, whatever
the number of workers or the order in which they finish.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .basis import DEFAULT_MAX_ENUMERATE, CapacityError, FockBasis, enumerate_basis
from .moments import QfiStatistics, delta_phi, qfi_statistics
from .propagation import (
    DETUNING_RANGE,
    HOP_RANGE,
    INTERACTION_RANGE,
    ControlTrajectory,
    evolve_amplitudes,
    propagation_tables,
)
from .qfi import haar_random_state, initial_state, qfi

# Few long steps scramble far better than many short ones: with many steps the
# random controls average out towards a static hop.  See README.
DEFAULT_STEPS = 5
WORKERS_ENV = "BOSEMC_WORKERS"

_TRIAL_STREAM = 0
_HAAR_STREAM = 1


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        workers = int(value)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
        return workers
    return os.cpu_count() or 1


def stream(seed: int, kind: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(kind, int(index))))
    )


def derive_seed(seed: int, *keys) -> int:
    """64-bit seed for a scan point; floats are keyed by their IEEE bit pattern."""
    words = [int(seed)]
    for key in keys:
        if isinstance(key, float):
            words.append(struct.unpack("<Q", struct.pack("<d", key))[0])
        else:
            words.append(int(key))
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class OptimizationConfig:
    n_particles: int
    n_modes: int
    total_time: float
    n_steps: int = DEFAULT_STEPS
    n_trials: int = 10
    seed: int = 0
    hop_range: tuple[float, float] = HOP_RANGE
    detuning_range: tuple[float, float] = DETUNING_RANGE
    interaction_range: tuple[float, float] = INTERACTION_RANGE
    swap_parity: bool = False

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"need at least one trial, got {self.n_trials}")
        if self.n_steps < 1:
            raise ValueError(f"need at least one control step, got {self.n_steps}")
        if not math.isfinite(self.total_time) or self.total_time < 0:
            raise ValueError(f"evolution time must be finite and non-negative, got {self.total_time}")
        if self.n_particles < 0 or self.n_modes < 1:
            raise ValueError("need N >= 0 particles and L >= 1 modes")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        for lo, hi in (self.hop_range, self.detuning_range, self.interaction_range):
            if not lo <= hi:
                raise ValueError(f"empty control range [{lo}, {hi}]")

    @property
    def ranges(self) -> dict:
        return {
            "hop": tuple(self.hop_range),
            "detuning": tuple(self.detuning_range),
            "interaction": tuple(self.interaction_range),
        }

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "n_modes": self.n_modes,
            "total_time": self.total_time,
            "n_steps": self.n_steps,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "hop_range": list(self.hop_range),
            "detuning_range": list(self.detuning_range),
            "interaction_range": list(self.interaction_range),
            "swap_parity": self.swap_parity,
        }


@dataclass
class OptimizationResult:
    best_qfi: float
    best_trial_index: int
    best_trajectory: ControlTrajectory
    all_qfi: np.ndarray
    statistics: QfiStatistics
    config: OptimizationConfig


def sample_trajectory(config: OptimizationConfig, trial_index: int,
                      rng_root: int | None = None) -> ControlTrajectory:
    """Uniform random controls for one trial, determined by (seed, trial_index)."""
    seed = config.seed if rng_root is None else rng_root
    if not 0 <= trial_index < config.n_trials:
        raise ValueError(f"trial index {trial_index} outside [0, {config.n_trials})")
    rng = stream(seed, _TRIAL_STREAM, trial_index)
    n, L = config.n_steps, config.n_modes
    J = rng.uniform(*config.hop_range, size=(n, L - 1))
    D = rng.uniform(*config.detuning_range, size=(n, L))
    U = rng.uniform(*config.interaction_range, size=(n, L))
    return ControlTrajectory(config.total_time, n, J, D, U, ranges=config.ranges)


def _run_trials(config, basis, tables, start, indices, backend):
    tilt = basis.tilt_values
    out = []
    for r in indices:
        traj = sample_trajectory(config, r)
        psi = start.copy()
        evolve_amplitudes(psi, traj, tables, backend=backend, swap_parity=config.swap_parity)
        out.append((r, qfi(psi, tilt)))
    return out


def optimize(config: OptimizationConfig, workers: int | None = None,
             backend: str | None = None, basis: FockBasis | None = None,
             max_dim: int = DEFAULT_MAX_ENUMERATE) -> OptimizationResult:
    """Evolve the all-on-site-1 Fock state under ``n_trials`` random trajectories
    and keep the one with the largest final QFI (lowest index on ties).
    """
    if basis is None:
        basis = enumerate_basis(config.n_particles, config.n_modes, max_dim)
    elif (basis.n_particles, basis.n_modes) != (config.n_particles, config.n_modes):
        raise ValueError("basis does not match the configuration")
    tables = propagation_tables(basis)
    start = initial_state(basis).amplitudes
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be positive")
    workers = min(workers, config.n_trials)

    scores = np.empty(config.n_trials)
    if workers == 1:
        chunks = [_run_trials(config, basis, tables, start, range(config.n_trials), backend)]
    else:
        parts = [range(w, config.n_trials, workers) for w in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                lambda idx: _run_trials(config, basis, tables, start, idx, backend), parts
            ))
    for chunk in chunks:
        for r, F in chunk:
            scores[r] = F

    best = int(np.argmax(scores))
    return OptimizationResult(
        best_qfi=float(scores[best]),
        best_trial_index=best,
        best_trajectory=sample_trajectory(config, best),
        all_qfi=scores,
        statistics=qfi_statistics(config.n_particles, config.n_modes),
        config=config,
    )


# -- Haar sampling -------------------------------------------------------------


def haar_qfi_samples(n_particles: int, n_modes: int, n_samples: int, seed: int,
                     basis: FockBasis | None = None) -> np.ndarray:
    """QFI of ``n_samples`` Haar-random states; sample ``i`` uses stream (seed, i)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if basis is None:
        basis = enumerate_basis(n_particles, n_modes)
    tilt = basis.tilt_values
    return np.array([
        qfi(haar_random_state(basis, stream(seed, _HAAR_STREAM, i)).amplitudes, tilt)
        for i in range(n_samples)
    ])


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    probability: float
    stderr: float
    n_samples: int


def tail_fraction(samples: np.ndarray, F0: float) -> TailEstimate:
    """Fraction of samples with QFI strictly above ``F0`` and its binomial standard error."""
    samples = np.asarray(samples)
    p = float(np.mean(samples > F0))
    return TailEstimate(float(F0), p, math.sqrt(p * (1.0 - p) / samples.size), samples.size)


def estimate_tail_density(n_particles: int, n_modes: int, F0: float, n_samples: int,
                          rng: int = 0) -> TailEstimate:
    return tail_fraction(haar_qfi_samples(n_particles, n_modes, n_samples, rng), F0)


# -- scans -----------------------------------------------------------------------


@dataclass
class ScanRow:
    n_particles: int
    n_modes: int
    total_time: float
    seed: int
    f_opt: float = math.nan
    mu_exact: float = math.nan
    sigma_exact: float = math.nan
    sql: float = math.nan
    hl: float = math.nan
    error: str | None = None

    @property
    def delta_phi(self) -> float:
        return delta_phi(self.f_opt) if math.isfinite(self.f_opt) else math.nan

    @property
    def ok(self) -> bool:
        return self.error is None


def _scan_point(template: OptimizationConfig, N: int, L: int, T: float,
                workers: int | None, backend: str | None, max_dim: int) -> ScanRow:
    seed = derive_seed(template.seed, N, L, float(T))
    row = ScanRow(N, L, float(T), seed)
    try:
        config = replace(template, n_particles=N, n_modes=L, total_time=float(T), seed=seed)
        result = optimize(config, workers=workers, backend=backend, max_dim=max_dim)
    except (CapacityError, MemoryError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    stats = result.statistics
    row.f_opt = result.best_qfi
    row.mu_exact = stats.mean_exact
    row.sigma_exact = stats.std_exact
    row.sql = stats.sql
    row.hl = stats.hl
    return row


def scan_system_sizes(L_list, N_list, template: OptimizationConfig,
                      workers: int | None = None, backend: str | None = None,
                      max_dim: int = DEFAULT_MAX_ENUMERATE) -> list[ScanRow]:
    """One optimization per (L, N) grid point; failures are recorded, not raised."""
    return [
        _scan_point(template, int(N), int(L), template.total_time, workers, backend, max_dim)
        for L in L_list
        for N in N_list
    ]


def scan_evolution_time(n_particles: int, n_modes: int, T_list, template: OptimizationConfig,
                        workers: int | None = None, backend: str | None = None,
                        max_dim: int = DEFAULT_MAX_ENUMERATE) -> list[ScanRow]:
    """Optimized QFI as a function of the preparation time."""
    return [
        _scan_point(template, n_particles, n_modes, float(T), workers, backend, max_dim)
        for T in T_list
    ]
