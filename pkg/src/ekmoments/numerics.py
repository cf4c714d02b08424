"""High-precision scalars, the Gamma function and Gaussian moment constants.

All analytic quantities in this package are mpmath ``mpf`` values ("high
precision reals") computed at a configurable working precision in decimal
digits.  Importing this module sets ``mpmath.mp.dps`` to the package default
(50 digits); use :func:`set_working_dps` to override globally.  Every
operation here is pure and deterministic at fixed precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp, mpf
import mpmath

from .errors import DomainError

#: Default working precision in significant decimal digits.
DEFAULT_DPS = 50

#: Minimum supported working precision.
MIN_DPS = 30

mp.dps = DEFAULT_DPS

HighPrecisionReal = mpf


def to_mpf(value) -> mpf:
    """Coerce int, float, str, Fraction or mpf to mpf at working precision."""
    if isinstance(value, mpf):
        return value
    from fractions import Fraction

    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    return mpf(value)


def set_working_dps(dps: int) -> None:
    """Set the global working precision (significant decimal digits, >= 30)."""
    if dps < MIN_DPS:
        raise DomainError(f"working precision must be >= {MIN_DPS} digits, got {dps}")
    mp.dps = dps


def working_dps() -> int:
    return mp.dps


def gamma(z) -> mpf:
    """Gamma(z) for real z > 0, relative error below 10**(1 - working dps).

    Only the positive real axis is supported; the library never evaluates
    at poles or on the reflection side.
    """
    z = mpf(z)
    if not z > 0:
        raise DomainError(f"gamma requires z > 0, got {z}")
    return mpmath.gamma(z)


@dataclass(frozen=True)
class GaussianMoments:
    """k-th Gaussian moment mu_k and its Gamma interpolation M_k.

    mu_k = E(G^k) for G ~ N(0,1): 0 for odd k, k!/(2^(k/2) (k/2)!) for even k.
    M_k = k!/(2^(k/2) Gamma(k/2 + 1)); equals mu_k for even k and interpolates
    the absolute-moment scale for odd k.
    """

    k: int
    mu_k: mpf
    M_k: mpf


def gaussian_mu(k: int) -> mpf:
    """E(G^k) for standard Gaussian G, exact integer arithmetic then converted."""
    if k < 0:
        raise DomainError(f"moment order must be >= 0, got {k}")
    if k % 2 == 1:
        return mp.zero
    half = k // 2
    return mpf(math.factorial(k) // (2**half * math.factorial(half)))


def gaussian_M(k: int) -> mpf:
    """k!/(2^(k/2) Gamma(k/2+1)); exact (== mu_k) for even k, via gamma for odd k."""
    if k < 0:
        raise DomainError(f"moment order must be >= 0, got {k}")
    if k % 2 == 0:
        return gaussian_mu(k)
    return mpf(math.factorial(k)) / (mpf(2) ** (mpf(k) / 2) * gamma(mpf(k) / 2 + 1))


def gaussian_moment(k: int) -> GaussianMoments:
    return GaussianMoments(k=k, mu_k=gaussian_mu(k), M_k=gaussian_M(k))


def log_stirling_check(k: int) -> mpf:
    """Ratio-minus-one of the two sides of the Stirling identity used for M_k.

    With lambda*r^2 = k the identity reads
        e^(k/2) / (2 pi r^k)  =  lambda^(k/2) M_k / k! * (1 + O(1/k)) / (2 sqrt(pi/k)),
    and after eliminating lambda and r the ratio of the two sides is
        (2e/k)^(k/2) * Gamma(k/2 + 1) / sqrt(pi k).
    Returns that ratio minus 1; |result| <= C/k with empirical C <= 1.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    kk = mpf(k)
    ratio = (2 * mp.e / kk) ** (kk / 2) * gamma(kk / 2 + 1) / mpmath.sqrt(mp.pi * kk)
    return ratio - 1
