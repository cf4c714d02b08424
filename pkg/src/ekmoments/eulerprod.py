"""The Selberg-Delange singular series F(z) on the positive real axis.

F(z) = 1/Gamma(z) * prod_p (1 - 1/p)^z (1 + z/(p-1)); F is entire, F(1) = 1
and F'(1) is the Meissel-Mertens constant.  Each prime factor is accumulated
in log form, g_z(u) = z*log(1-u) + log(1 + z*u/(1-u)) with u = 1/p, which is
O((z^2+z)/p^2), so the plain product converges too slowly for the precision
this package needs.  The tail over p > p0 is therefore resummed exactly
through the prime zeta function:

    sum_{p > p0} g_z(1/p) = sum_{j >= 2} c_j(z) * P_{>p0}(j),

where g_z(u) = sum_{j>=2} c_j(z) u^j (c_1 vanishes; that is why the product
converges at all) and P_{>p0}(j) = sum_{p > p0} p^-j.  Truncating at j = J
leaves a rigorously bounded remainder: with theta = 2(z+1)/p0 < 1,

    |c_j(z)| <= 1.5 * (2(z+1))^j     (Cauchy bound on |u| = 1/(2(z+1))),
    P_{>p0}(j) <= p0^(1-j) / (j-1),
    |tail_J|  <= 1.5 * p0 * theta^(J+1) / (J * (1 - theta)).

P_{>p0}(j) is evaluated as primezeta(j) minus the small-prime partial sum at
a precision raised by ~ j*log10(p0) digits to absorb the cancellation, and
cached: the values depend only on (j, p0, dps), not on z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from mpmath import mp, mpf
import mpmath

from .errors import DomainError, ResourceCapError
from .numerics import gamma
from .primes import simple_primes

#: Range guard: arguments above e**MAX_LOG_ARG raise (matches the formula
#: modules' configured A; see asymptotics.RANGE_A).
MAX_LOG_ARG = 3.0

_P0_CAP = 10**7


@dataclass(frozen=True)
class EulerProductValue:
    """Value of F at z with the prime cutoff and a rigorous tail bound on log F."""

    z: mpf
    value: mpf
    prime_cutoff: int
    tail_bound: mpf


@lru_cache(maxsize=None)
def _prime_zeta_above(j: int, p0: int, dps: int) -> mpf:
    """sum_{p > p0} p^-j to dps significant digits.

    primezeta(j) ~ 2^-j while the result ~ q^-j for the next prime q > p0,
    so the subtraction cancels ~ j*log10(p0/2) digits; computed at raised
    precision accordingly.
    """
    extra = int(j * math.log10(p0)) + 20
    with mp.workdps(dps + extra):
        v = mpmath.primezeta(j)
        for p in simple_primes(p0).tolist():
            v -= mpf(p) ** (-j)
    with mp.workdps(dps):
        return +v


def _log_factor_coeffs(z: mpf, J: int) -> list[mpf]:
    """Coefficients c_j of g_z(u) = sum_{j>=2} c_j u^j.

    z*log(1-u) contributes -z/j; log(1+w) with w = z*(u + u^2 + ...) is built
    by the series-log recurrence n*l_n = n*w_n - sum_{m<n} m*l_m*w_{n-m},
    which collapses to l_n = z - z/n * sum_{m<n} m*l_m since every w_i = z.
    """
    cs = [mp.zero] * (J + 1)
    acc = mp.zero
    for n in range(1, J + 1):
        ln = z - z * acc / n
        acc += n * ln
        if n >= 2:
            cs[n] = ln - z / n
    return cs


def eval_F(z, err_target: int | None = None, prime_cutoff: int | None = None) -> EulerProductValue:
    """Evaluate F(z) for 0 < z <= e**MAX_LOG_ARG.

    err_target is the requested number of correct digits (default: working
    precision minus 2); prime_cutoff overrides the exactly-summed prime range
    p <= p0 (tests use this for cutoff-doubling consistency checks).
    tail_bound is the documented bound on |log F_computed - log F|.
    """
    z = mpf(z)
    if not z > 0:
        raise DomainError(f"F is evaluated for z > 0 only, got {z}")
    if z > mpmath.exp(mpf(MAX_LOG_ARG)) * (1 + mpf(10) ** (-mp.dps + 5)):
        raise DomainError(f"z={z} above configured range e^{MAX_LOG_ARG}")
    if err_target is None:
        err_target = mp.dps - 2

    p0 = prime_cutoff if prime_cutoff is not None else max(50, int(4 * (z + 1)))
    theta = 2 * (z + 1) / p0
    if theta >= mpf(3) / 4:
        raise DomainError(f"prime cutoff {p0} too small for z={z}")
    # 1.5*p0*theta^(J+1)/(J*(1-theta)) <= 10^-err_target
    J = int((err_target * mp.log(10) + mp.log(1.5 * p0 / (1 - theta))) / -mp.log(theta)) + 2
    J = max(J, 4)
    if p0 > _P0_CAP:
        raise ResourceCapError(f"prime cutoff {p0} exceeds cap {_P0_CAP}")

    logsum = mp.zero
    primes = simple_primes(p0).tolist()
    for p in primes:
        u = mpf(1) / p
        logsum += z * mpmath.log(1 - u) + mpmath.log(1 + z * u / (1 - u))
    cs = _log_factor_coeffs(z, J)
    for j in range(2, J + 1):
        logsum += cs[j] * _prime_zeta_above(j, p0, mp.dps)
    tail = mpf(1.5) * p0 * theta ** (J + 1) / (J * (1 - theta))
    return EulerProductValue(z=z, value=mpmath.exp(logsum) / gamma(z), prime_cutoff=p0, tail_bound=tail)


def F(z) -> mpf:
    """Convenience: the value of eval_F(z) alone."""
    return eval_F(z).value


def F_prime_at_1(h=None) -> mpf:
    """F'(1) (= the Meissel-Mertens constant) by central finite difference.

    (F(1+h) - F(1-h)) / (2h) with h = 1e-10: truncation is h^2*|F'''|/6 and
    rounding is ~10^(2-dps)/h, both far below the 1e-8 contract at >= 30
    digits working precision.
    """
    if h is None:
        h = mpf(10) ** (-10)
    h = mpf(h)
    return (F(1 + h) - F(1 - h)) / (2 * h)


@lru_cache(maxsize=None)
def _mertens_cached(dps: int) -> mpf:
    return F_prime_at_1()


def mertens_a() -> mpf:
    """The Meissel-Mertens constant as F'(1), cached per working precision.

    The independent prime-sum route lives in primes.meissel_mertens; the two
    are cross-checked in the acceptance suite.
    """
    return _mertens_cached(mp.dps)


@lru_cache(maxsize=None)
def _taylor_cached(order: int, dps: int) -> tuple:
    coeffs = mpmath.taylor(lambda w: F(1 + w), 0, order)
    return tuple(coeffs)


def f_taylor_at_1(order: int) -> list[mpf]:
    """Taylor coefficients of F about 1, i.e. F(1+w) = sum_m c_m w^m + O(w^(order+1)).

    Derivatives come from repeated central finite differences of eval_F with
    per-order step tuning (mpmath.diff raises the working precision
    internally, which eval_F honors).  Cached per (order, working dps).
    """
    return list(_taylor_cached(order, mp.dps))
