"""Random-control preparation of metrologically useful states of bosons in a tilted lattice."""

__version__ = "0.1.0"

from .basis import CapacityError, FockBasis, dimension, enumerate_basis, pair_hop_blocks
from .moments import (
    cantelli_lower,
    cantelli_upper,
    qfi_mean_exact,
    qfi_statistics,
    qfi_variance_exact,
    tilt_power_sum,
)
from .montecarlo import OptimizationConfig, estimate_tail_density, optimize
from .propagation import ControlTrajectory, StateVector, evolve
from .qfi import coherent_state, ghz_state, haar_random_state, initial_state, qfi

__all__ = [
    "CapacityError",
    "ControlTrajectory",
    "FockBasis",
    "OptimizationConfig",
    "StateVector",
    "cantelli_lower",
    "cantelli_upper",
    "coherent_state",
    "dimension",
    "enumerate_basis",
    "estimate_tail_density",
    "evolve",
    "ghz_state",
    "haar_random_state",
    "initial_state",
    "optimize",
    "pair_hop_blocks",
    "qfi",
    "qfi_mean_exact",
    "qfi_statistics",
    "qfi_variance_exact",
    "tilt_power_sum",
]
