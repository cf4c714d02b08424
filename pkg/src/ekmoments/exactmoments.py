"""Exact centered moments: Poisson, Poisson-binomial, omega(n) from a histogram.

Poisson raw moments are Touchard polynomials, E X^n = sum_j S(n,j) lam^j with
Stirling numbers of the second kind from the exact integer triangle, and
central moments follow by binomial centering.  All of that is done in exact
rational arithmetic (lam is converted to an exact Fraction, which is always
possible for int, Fraction and binary-float/mpf inputs), so there is no
cancellation error even at k = 1000 where the centering sum cancels hundreds
of digits.  Poisson-binomial moments come from the moment generating function
e^{-lam z} prod_i (1 + p_i (e^z - 1)) folded factor by factor into a truncated
series; the factor stream is consumed lazily and never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from mpmath import mp, mpf
import mpmath

from .errors import DomainError, NonConvergenceError, RangeGuardError
from .numerics import gaussian_mu, to_mpf
from .primes import OmegaHistogram
from .series import EXP_MINUS_1, TruncatedSeries, exp_z_minus, series_exp, to_mpf_series

_TAIL_TERM_CAP = 10**7


def _as_fraction(value) -> Fraction:
    """Exact rational value of an int, Fraction, float or mpf (binary floats are rationals)."""
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    v = mpf(value)
    sign, man, exp, _ = v._mpf_
    if man == 0 and exp != 0:
        raise DomainError(f"cannot convert special value {v} to a rational")
    man = -man if sign else man
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def _stirling_rows(kmax: int):
    """Yield rows S(n, 0..n) of the Stirling-second-kind triangle, n = 0..kmax."""
    row = [1]
    yield row
    for n in range(1, kmax + 1):
        new = [0] * (n + 1)
        for j in range(1, n + 1):
            above = row[j - 1]
            right = row[j] if j < len(row) else 0
            new[j] = above + j * right
        row = new
        yield row


def _poisson_raw_moments(lam: Fraction, kmax: int) -> list[Fraction]:
    """E X^n for n = 0..kmax, exact; integers when lam is an integer."""
    lam_pows = [Fraction(1)]
    for _ in range(kmax):
        lam_pows.append(lam_pows[-1] * lam)
    out = []
    for n, row in enumerate(_stirling_rows(kmax)):
        if n == 0:
            out.append(Fraction(1))
            continue
        out.append(sum(row[j] * lam_pows[j] for j in range(1, n + 1)))
    return out


def poisson_central_moments(lam, k_max: int) -> list[mpf]:
    """E(X(lam) - lam)^k for k = 0..k_max, exact arithmetic throughout."""
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    lam_q = _as_fraction(lam)
    if lam_q <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    raw = _poisson_raw_moments(lam_q, k_max)
    out = []
    for k in range(k_max + 1):
        acc = Fraction(0)
        for j in range(k + 1):
            acc += math.comb(k, j) * (-lam_q) ** (k - j) * raw[j]
        out.append(_fraction_to_mpf(acc))
    return out


def poisson_central_moment(lam, k: int) -> mpf:
    """E(X(lam) - lam)^k, exact via Stirling raw moments and binomial centering."""
    return poisson_central_moments(lam, k)[k]


def _fraction_to_mpf(q: Fraction) -> mpf:
    return mpf(q.numerator) / q.denominator if q.denominator != 1 else mpf(q.numerator)


def poisson_binomial_central_moments(p: Iterable, k_max: int) -> list[mpf]:
    """E(Y - lam)^k for k = 0..k_max, Y a sum of independent Bernoulli(p_i).

    Builds the order-k_max series of e^{-lam z} prod_i (1 + p_i (e^z - 1)) by
    a sequential fold over the probability stream (cost O(n k_max^2)); returns
    k! c_k.  The product part has nonnegative coefficients, so cancellation
    enters only through the final e^{-lam z} factor and stays far below
    working precision for the ranges this package handles.
    """
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    K = k_max
    ez1 = to_mpf_series(exp_z_minus(EXP_MINUS_1, K)).coeffs
    prod = [mp.one] + [mp.zero] * K
    lam = mp.zero
    for p_i in p:
        p_i = to_mpf(p_i)
        if not (0 <= p_i <= 1):
            raise DomainError(f"probabilities must lie in [0, 1], got {p_i}")
        lam += p_i
        if p_i == 0:
            continue
        # prod *= 1 + p_i * (e^z - 1), truncated at K
        new = prod[:]
        for i in range(K):
            ci = prod[i]
            if ci == 0:
                continue
            pci = p_i * ci
            for j in range(1, K + 1 - i):
                new[i + j] += pci * ez1[j]
        prod = new
    shift = series_exp(TruncatedSeries([mp.zero, -lam], order=K))
    full = TruncatedSeries(prod) * shift
    return [mpmath.factorial(k) * full[k] for k in range(K + 1)]


def omega_central_moment(hist: OmegaHistogram, c, k: int, sigma=None) -> mpf:
    """(1/x) sum_m N_m (m - c)^k from the histogram; divided by sigma^k when given."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    c = mpf(c)
    total = mp.zero
    for m, count in sorted(hist.counts.items()):
        total += count * (m - c) ** k
    value = total / hist.x
    if sigma is not None:
        sigma = mpf(sigma)
        if not sigma > 0:
            raise DomainError(f"sigma must be > 0, got {sigma}")
        value /= sigma**k
    return value


def shifted_central_moment(central: Sequence[mpf], shift) -> mpf:
    """E(V - mu - shift)^k from central moments E(V - mu)^j, j = 0..k."""
    shift = mpf(shift)
    k = len(central) - 1
    acc = mp.zero
    for j in range(k + 1):
        acc += math.comb(k, j) * (-shift) ** (k - j) * central[j]
    return acc


def _poisson_logpmf(i: int, lam: mpf) -> mpf:
    return -lam + i * mpmath.log(lam) - mpmath.loggamma(i + 1)


def poisson_tail_moment(lam, k: int, T) -> mpf:
    """E(((X - lam)/sqrt(lam))^{2k} * 1{|X - lam|/sqrt(lam) > T}), exact summation.

    Sums both tails outward from the threshold, stepping the pmf by its
    neighbour ratio; terms are added until they fall below 10^-dps relative
    to the running total, but never before the integrand peak near
    lam + sqrt(2 k lam) has been passed.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    lam = mpf(lam)
    T = mpf(T)
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    sq = mpmath.sqrt(lam)
    two_k = 2 * k
    rel_tol = mpf(10) ** (-mp.dps)
    total = mp.zero
    terms = 0

    # upper tail: i > lam + T sqrt(lam)
    i = int(mpmath.floor(lam + T * sq)) + 1
    peak_up = int(mpmath.ceil(lam + mpmath.sqrt(2 * k * lam))) + 2
    pmf = mpmath.exp(_poisson_logpmf(i, lam))
    while True:
        t = (i - lam) / sq
        if t > T:
            term = pmf * t**two_k
            total += term
            if i > peak_up and term < rel_tol * total:
                break
        terms += 1
        if terms > _TAIL_TERM_CAP:
            raise NonConvergenceError("tail moment did not converge within the term cap")
        pmf *= lam / (i + 1)
        i += 1

    # lower tail: 0 <= i < lam - T sqrt(lam)
    i = int(mpmath.ceil(lam - T * sq)) - 1
    if i >= 0:
        peak_dn = int(mpmath.floor(lam - mpmath.sqrt(2 * k * lam))) - 2
        pmf = mpmath.exp(_poisson_logpmf(i, lam))
        while i >= 0:
            t = (i - lam) / sq
            if -t > T:
                term = pmf * (-t) ** two_k
                total += term
                if i < peak_dn and term < rel_tol * total:
                    break
            terms += 1
            if terms > _TAIL_TERM_CAP:
                raise NonConvergenceError("tail moment did not converge within the term cap")
            if i == 0:
                break
            pmf *= i / lam
            i -= 1
    return total


def gaussian_tail_moment(k: int, T) -> mpf:
    """E(G^{2k} * 1{|G| > T}) for standard Gaussian G.

    Uses I_j(T) = integral_T^inf t^j e^{-t^2/2} dt with the stable upward
    recurrence I_j = T^{j-1} e^{-T^2/2} + (j-1) I_{j-2}; result is
    2 I_{2k}(T)/sqrt(2 pi).
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    T = mpf(T)
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    e = mpmath.exp(-(T**2) / 2)
    i_even = mpmath.sqrt(mp.pi / 2) * mpmath.erfc(T / mpmath.sqrt(2))  # I_0
    i_odd = e  # I_1
    for j in range(2, 2 * k + 1):
        if j % 2 == 0:
            i_even = T ** (j - 1) * e + (j - 1) * i_even
        else:
            i_odd = T ** (j - 1) * e + (j - 1) * i_odd
    return 2 * i_even / mpmath.sqrt(2 * mp.pi)


def interval_probability(dist: str, j: int, lam=None) -> mpf:
    """P(V in [j, j+1)) for V = G, or V = (X(lam) - lam)/sqrt(lam) for Poisson.

    gaussian: (erfc-based, no cancellation in the far tail); poisson: exact
    pmf sum over the integers i with (i - lam)/sqrt(lam) in [j, j+1).
    """
    if dist == "gaussian":
        rt2 = mpmath.sqrt(2)
        lo, hi = mpf(j), mpf(j + 1)
        if lo >= 0:
            return (mpmath.erfc(lo / rt2) - mpmath.erfc(hi / rt2)) / 2
        if hi <= 0:
            return (mpmath.erfc(-hi / rt2) - mpmath.erfc(-lo / rt2)) / 2
        return (2 - mpmath.erfc(-lo / rt2) - mpmath.erfc(hi / rt2)) / 2
    if dist == "poisson":
        if lam is None:
            raise DomainError("poisson interval probability needs lam")
        lam = mpf(lam)
        sq = mpmath.sqrt(lam)
        i_lo = int(mpmath.ceil(lam + sq * j))
        i_hi = int(mpmath.ceil(lam + sq * (j + 1)))  # exclusive
        i_lo = max(i_lo, 0)
        if i_hi <= i_lo:
            raise RangeGuardError(f"empty integer range for j={j}, lam={lam}")
        pmf = mpmath.exp(_poisson_logpmf(i_lo, lam))
        total = pmf
        for i in range(i_lo, i_hi - 1):
            pmf *= lam / (i + 1)
            total += pmf
        return total
    raise DomainError(f"unknown distribution {dist!r}")


# ---------------------------------------------------------------------------
# Moment queries and centering resolution (CLI-facing plumbing).

CENTERING_MODES = ("loglogx", "loglogx_plus_a", "mertens_sum", "lambda", "custom")


@dataclass(frozen=True)
class CenteringSpec:
    """Symbolic centering; resolves to a concrete value given x or lam."""

    mode: str
    custom: object = None

    def resolve(self, x=None, lam=None) -> mpf:
        if self.mode == "custom":
            if self.custom is None:
                raise DomainError("custom centering needs a value")
            return mpf(self.custom)
        if self.mode == "lambda":
            if lam is None:
                raise DomainError("lambda centering needs lam")
            return mpf(lam)
        if x is None:
            raise DomainError(f"centering {self.mode} needs x")
        llx = mpmath.log(mpmath.log(mpf(x)))
        if self.mode == "loglogx":
            return llx
        if self.mode == "loglogx_plus_a":
            from .eulerprod import mertens_a

            return llx + mertens_a()
        if self.mode == "mertens_sum":
            from .primes import prime_reciprocal_sum

            return prime_reciprocal_sum(int(x)).reciprocal_sum
        raise DomainError(f"unknown centering mode {self.mode!r}")


@dataclass(frozen=True)
class MomentQuery:
    """A centered-moment request against one of the three exact distributions.

    distribution: ("poisson", lam) | ("poisson_binomial", probabilities)
                  | ("omega", OmegaHistogram)
    """

    distribution: tuple
    k: int
    centering: object  # value accepted by mpf
    normalization: object = 1


def exact_moment(query: MomentQuery) -> mpf:
    """E((V - c)/sigma)^k for the queried distribution, exactly."""
    kind, arg = query.distribution
    k = query.k
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    c = to_mpf(query.centering)
    sigma = to_mpf(query.normalization)
    if not sigma > 0:
        raise DomainError(f"normalization must be > 0, got {sigma}")
    if kind == "poisson":
        lam = mpf(arg)
        central = poisson_central_moments(arg, k)
        value = shifted_central_moment(central, c - lam)
    elif kind == "poisson_binomial":
        ps = list(arg)
        central = poisson_binomial_central_moments(ps, k)
        lam = mpmath.fsum(to_mpf(p) for p in ps)
        value = shifted_central_moment(central, c - lam)
    elif kind == "omega":
        value = omega_central_moment(arg, c, k)
    else:
        raise DomainError(f"unknown distribution kind {kind!r}")
    return value / sigma**k


@lru_cache(maxsize=None)
def _pb_identical_cached(p_key, n: int, k_max: int, dps: int):
    return tuple(poisson_binomial_central_moments([mpf(p_key)] * n, k_max))


def pb_identical_central_moments(p, n: int, k_max: int) -> list[mpf]:
    """Moments for n identical Bernoulli(p) factors (memoized convenience)."""
    return list(_pb_identical_cached(str(mpf(p)), n, k_max, mp.dps))
