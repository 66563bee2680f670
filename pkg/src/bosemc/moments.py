"""Exact Haar-measure statistics of the QFI and the reference scales around it.

Combinatorial sums and moments are evaluated as exact rationals and only
converted to float at the end; the ``N^4 L^4`` terms overflow a double's
integer range near N ~ 200.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

import numpy as np

from .basis import FockBasis, dimension


def haar_moment_exact(d: int, exponents) -> Fraction:
    """``E[p_1^r1 ... p_l^rl]`` over Haar states for distinct basis indices.

    Equals ``r1! ... rl! (d-1)! / (d + R - 1)!`` with ``R = sum r``,
    computed as ``prod r_i! / prod_{j<R} (d + j)``.
    """
    exponents = [int(r) for r in exponents]
    if d < 1:
        raise ValueError("dimension must be positive")
    if any(r < 1 for r in exponents):
        raise ValueError("exponents must be positive integers")
    if len(exponents) > d:
        raise ValueError(f"cannot pick {len(exponents)} distinct indices out of {d}")
    num = 1
    for r in exponents:
        num *= factorial(r)
    den = 1
    for j in range(sum(exponents)):
        den *= d + j
    return Fraction(num, den)


def haar_moment(d: int, exponents) -> float:
    return float(haar_moment_exact(d, exponents))


# -- power sums of the tilt eigenvalues --------------------------------------


def tilt_power_sum(n_particles: int, n_modes: int, k: int) -> int:
    """Closed form of ``sum over the basis of s^k`` for k = 1..4."""
    N, L = Fraction(n_particles), Fraction(n_modes)
    d = dimension(n_particles, n_modes)
    if k == 1:
        value = (L + 1) / 2 * N * d
    elif k == 2:
        value = d * ((3 * L**2 + 7 * L + 2) / 12 * N**2 + L * (L - 1) / 12 * N)
    elif k == 3:
        value = d * (
            (L**3 / 8 + L**2 / 2 + 3 * L / 8) * N**3 + (L**3 / 8 - L / 8) * N**2
        )
    elif k == 4:
        value = Fraction(d, 240) * (
            (15 * L**4 + 90 * L**3 + 125 * L**2 + 18 * L - 8) * N**4
            + (30 * L**4 + 40 * L**3 - 54 * L**2 - 16 * L) * N**3
            + (5 * L**4 - 14 * L**3 + 11 * L**2 - 2 * L) * N**2
            - 2 * L**2 * (L - 1) ** 2 * N
        )
    else:
        raise ValueError(f"closed forms exist for k = 1..4 only, got {k!r}")
    if value.denominator != 1:
        raise ArithmeticError(f"S_{k}({n_particles}, {n_modes}) is not an integer: {value}")
    return int(value)


def brute_force_tilt_power_sum(basis: FockBasis, k: int) -> int:
    """``sum s^k`` by direct enumeration of the basis, in Python integers."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    sites = np.arange(1, basis.n_modes + 1, dtype=np.int64)
    s = basis.occupations @ sites
    values, counts = np.unique(s, return_counts=True)
    return sum(int(v) ** int(k) * int(c) for v, c in zip(values, counts))


# -- mean and variance -------------------------------------------------------


def _sums(n_particles, n_modes):
    return [tilt_power_sum(n_particles, n_modes, k) for k in (1, 2, 3, 4)]


def qfi_mean_fraction(n_particles: int, n_modes: int) -> Fraction:
    N, L = n_particles, n_modes
    d = dimension(N, L)
    closed = Fraction(d, d + 1) * Fraction(N * (L - 1) * (N + L), 3)
    S1, S2, _, _ = _sums(N, L)
    M1 = Fraction(1, d)
    M2 = Fraction(2, d * (d + 1))
    M11 = Fraction(1, d * (d + 1))
    via_moments = 4 * (M1 * S2 - M11 * (S1**2 - S2) - M2 * S2)
    if closed != via_moments:
        raise ArithmeticError(f"mean routes disagree at N={N}, L={L}: {closed} vs {via_moments}")
    return closed


def qfi_mean_exact(n_particles: int, n_modes: int) -> float:
    """Haar average of the QFI."""
    return float(qfi_mean_fraction(n_particles, n_modes))


def qfi_second_moment_fraction(n_particles: int, n_modes: int) -> Fraction:
    d = dimension(n_particles, n_modes)
    S1, S2, S3, S4 = _sums(n_particles, n_modes)
    bracket = (
        S1**4
        - 2 * d * S1**2 * S2
        - (4 * d + 4) * S1 * S3
        + (d * d + 3 * d + 3) * S2**2
        + (d * d + d) * S4
    )
    return Fraction(16 * bracket, d * (d + 1) * (d + 2) * (d + 3))


def qfi_variance_closed_fraction(n_particles: int, n_modes: int) -> Fraction:
    N, L = n_particles, n_modes
    d = dimension(N, L)
    pref = Fraction(2 * N * d * (L - 1) * (N + L), 45 * (d + 1) ** 2 * (d + 2) * (d + 3))
    braces = N * (N + L) * (5 * L * (d * d + 3 * d + 3) - (8 * d * d + 21 * d + 18)) \
        - 3 * L * (L - 1) * (d + 1) ** 2
    return pref * braces


def qfi_variance_routes(n_particles: int, n_modes: int) -> tuple[float, float]:
    """(closed braced formula, second moment minus mean squared), both as floats."""
    closed = qfi_variance_closed_fraction(n_particles, n_modes)
    second = qfi_second_moment_fraction(n_particles, n_modes) - qfi_mean_fraction(n_particles, n_modes) ** 2
    return float(closed), float(second)


def qfi_variance_exact(n_particles: int, n_modes: int, rtol: float = 1e-10) -> float:
    """Haar variance of the QFI; both derivation routes must agree to ``rtol``."""
    closed, second = qfi_variance_routes(n_particles, n_modes)
    if abs(closed - second) > rtol * max(abs(closed), abs(second), 1e-300):
        raise ArithmeticError(
            f"variance routes disagree at N={n_particles}, L={n_modes}: {closed!r} vs {second!r}"
        )
    return closed


def brute_force_qfi_moments(basis: FockBasis) -> tuple[Fraction, Fraction]:
    """Exact Haar mean and second moment of the QFI by summing over index tuples.

    Expands ``F = 4 (A - B^2)`` with ``A = sum s^2 p``, ``B = sum s p`` and
    averages every monomial in the probabilities with
    :func:`haar_moment_exact`.  Cost is O(d^4); use for d <= ~12.
    """
    d = basis.dim
    s = [int(x) for x in (basis.occupations @ np.arange(1, basis.n_modes + 1))]
    cache: dict[tuple[int, ...], Fraction] = {}

    def moment(*idx):
        key = tuple(sorted(Counter(idx).values()))
        if key not in cache:
            cache[key] = haar_moment_exact(d, key)
        return cache[key]

    rng = range(d)
    EA = sum(s[a] ** 2 * moment(a) for a in rng)
    EB2 = sum(s[a] * s[b] * moment(a, b) for a in rng for b in rng)
    EA2 = sum(s[a] ** 2 * s[b] ** 2 * moment(a, b) for a in rng for b in rng)
    EAB2 = sum(
        s[a] ** 2 * s[b] * s[c] * moment(a, b, c) for a in rng for b in rng for c in rng
    )
    EB4 = sum(
        s[a] * s[b] * s[c] * s[e] * moment(a, b, c, e)
        for a in rng for b in rng for c in rng for e in rng
    )
    mean = 4 * (EA - EB2)
    second = 16 * (EA2 - 2 * EAB2 + EB4)
    return mean, second


# -- bounds and reference scales ---------------------------------------------


def cantelli_upper(F0: float, mu: float, sigma: float) -> float:
    """Upper bound on ``P(F >= F0)`` for ``F0 >= mu``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if F0 < mu:
        raise ValueError("cantelli_upper needs F0 >= mu; use cantelli_lower")
    t = F0 - mu
    return sigma**2 / (sigma**2 + t**2)


def cantelli_lower(F0: float, mu: float, sigma: float) -> float:
    """Lower bound on ``P(F > F0)`` for ``F0 <= mu``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if F0 > mu:
        raise ValueError("cantelli_lower needs F0 <= mu; use cantelli_upper")
    t = mu - F0
    return t**2 / (sigma**2 + t**2)


def delta_phi(F: float) -> float:
    """Phase precision ``1 / sqrt(F)`` (infinite for F = 0)."""
    if F < 0:
        raise ValueError("QFI cannot be negative")
    return float("inf") if F == 0 else 1.0 / sqrt(F)


@dataclass(frozen=True)
class ReferenceLimits:
    sql_qfi: float
    hl_qfi: float
    delta_eta_sql: float
    delta_eta_hl: float

    @staticmethod
    def delta_phi_from(F: float) -> float:
        return delta_phi(F)


def reference_limits(n_particles: int, n_modes: int, tau: float = 1.0) -> ReferenceLimits:
    """SQL/HL QFI values and tilt-strength precisions for acquisition time ``tau``."""
    N, L = n_particles, n_modes
    if tau <= 0:
        raise ValueError("acquisition time must be positive")
    if L < 2:
        raise ValueError("need at least two modes")
    if N < 1:
        raise ValueError("need at least one particle")
    return ReferenceLimits(
        sql_qfi=float(N * (L - 1) ** 2),
        hl_qfi=float(N**2 * (L - 1) ** 2),
        delta_eta_sql=1.0 / ((L - 1) * sqrt(N) * tau),
        delta_eta_hl=1.0 / ((L - 1) * N * tau),
    )


@dataclass(frozen=True)
class QfiStatistics:
    n_particles: int
    n_modes: int
    dimension: int
    mean_exact: float
    variance_exact: float
    mean_leading: float
    std_leading: float
    sql: float
    hl: float

    @property
    def std_exact(self) -> float:
        return sqrt(self.variance_exact)

    @property
    def intermediate(self) -> float:
        """``mu - sigma``, the QFI exceeded by at least half of the Hilbert space."""
        return self.mean_exact - self.std_exact

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "n_modes": self.n_modes,
            "dimension": self.dimension,
            "mean_exact": self.mean_exact,
            "variance_exact": self.variance_exact,
            "std_exact": self.std_exact,
            "mean_leading": self.mean_leading,
            "std_leading": self.std_leading,
            "sql": self.sql,
            "hl": self.hl,
        }


def qfi_statistics(n_particles: int, n_modes: int) -> QfiStatistics:
    N, L = n_particles, n_modes
    d = dimension(N, L)
    leading = (N**2 * L + N * L**2) / 3
    return QfiStatistics(
        n_particles=N,
        n_modes=L,
        dimension=d,
        mean_exact=qfi_mean_exact(N, L),
        variance_exact=qfi_variance_exact(N, L),
        mean_leading=leading,
        std_leading=leading / sqrt(d / 2),
        sql=float(N * (L - 1) ** 2),
        hl=float(N**2 * (L - 1) ** 2),
    )
