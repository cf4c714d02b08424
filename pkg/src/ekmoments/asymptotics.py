"""Saddle-point solver and asymptotic main terms for centered moments.

Each ``*_main`` function evaluates one asymptotic right-hand side for the
k-th normalized centered moment -- of a Poisson variable, of omega(n) under
uniform n <= x, or of a Poisson-binomial sum -- together with the formula's
error term evaluated with constant 1 ("predicted_relative_error").  The
artifact's claim is that a bounded constant makes the prediction true on the
tested grids; the acceptance suite fits and freezes those constants.

Powers of log x are always computed as exp(loglog_x * (...)) so that only
lam = log log x is ever needed; synthetic scales such as loglog_x = 100 work
without a representable x.  Range guards use the configured constant A
(default 3) and raise rather than extrapolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from mpmath import mp, mpf
import mpmath

from .errors import DomainError, NonConvergenceError, RangeGuardError
from .eulerprod import F, mertens_a
from .numerics import gaussian_M, gaussian_mu, to_mpf

#: Uniformity constant A in all range guards (k <= A*lam etc.).
RANGE_A = mpf(3)

#: Brackets whose terms cancel beyond this factor get a quality flag.
CANCELLATION_FLAG_RATIO = mpf(10) ** 3

FORMULA_IDS = (
    "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8",
    "T1a", "T1b", "T2a", "T2b", "T2c", "T3a", "T3b", "T3c", "T4",
    "CorTech",
)


@dataclass(frozen=True)
class SaddleSolution:
    """r solving r(e^r - 1) = k/lam, with the derived saddle quantities.

    t = r/(e^r - 1), b = (e^r + (e^r - 1)/r)/2, s = b t,
    S1 = t (e^r - r^2/2 - r - 1)/r^2, S2 = (t - 1 - log t)/2, S = S1 + S2.
    For r > 0: t in (0,1), b > 1, s > 0, S1 > 0, S2 > 0.
    """

    k: int
    lam: mpf
    r: mpf
    b: mpf
    t: mpf
    S1: mpf
    S2: mpf
    S: mpf
    s: mpf


@dataclass(frozen=True)
class AsymptoticValue:
    """Main term of one asymptotic formula plus its error term at constant 1."""

    main: mpf
    predicted_relative_error: mpf
    formula_id: str
    flags: tuple = ()


def solve_saddle(k: int, lam) -> SaddleSolution:
    """Newton iteration for r(e^r - 1) = k/lam from r0 = sqrt(k/lam).

    g(r) = r(e^r - 1) - k/lam is convex and increasing on r > 0, so the
    iteration converges monotonically; 200 iterations is an unreachable cap.
    """
    if k < 1:
        raise RangeGuardError(f"k must be >= 1, got {k}")
    lam = mpf(lam)
    if not lam > 0:
        raise RangeGuardError(f"lam must be > 0, got {lam}")
    target = mpf(k) / lam
    if target > RANGE_A * (mpmath.exp(RANGE_A) - 1):
        raise RangeGuardError(
            f"k/lam = {target} outside configured range A(e^A - 1) with A = {RANGE_A}"
        )
    tol = mpf(10) ** (-(mp.dps - 10))
    r = mpmath.sqrt(target)
    for _ in range(200):
        er = mpmath.exp(r)
        g = r * (er - 1) - target
        step = g / (er - 1 + r * er)
        r -= step
        if abs(step) <= tol * abs(r):
            break
    else:
        raise NonConvergenceError("saddle iteration did not converge")
    er = mpmath.exp(r)
    t = r / (er - 1)
    b = (er + (er - 1) / r) / 2
    S1 = t * (er - r**2 / 2 - r - 1) / r**2
    S2 = (t - 1 - mpmath.log(t)) / 2
    return SaddleSolution(k=k, lam=lam, r=r, b=b, t=t, S1=S1, S2=S2, S=S1 + S2, s=b * t)


def _loglog(x=None, loglog_x=None) -> mpf:
    if (x is None) == (loglog_x is None):
        raise DomainError("pass exactly one of x, loglog_x")
    if loglog_x is not None:
        lam = mpf(loglog_x)
    else:
        if mpf(x) < 3:
            raise RangeGuardError(f"x must be >= 3, got {x}")
        lam = mpmath.log(mpmath.log(mpf(x)))
    if not lam > 0:
        raise RangeGuardError(f"log log x must be positive, got {lam}")
    return lam


def _bracket(term_plus: mpf, term_minus: mpf) -> tuple[mpf, tuple]:
    """Sum two bracket terms, flagging relative cancellation beyond 10^3."""
    total = term_plus + term_minus
    size = abs(term_plus) + abs(term_minus)
    flags: tuple = ()
    if total == 0 or (size > 0 and size / max(abs(total), mpf(10) ** (-mp.dps)) > CANCELLATION_FLAG_RATIO):
        flags = ("cancellation",)
    return total, flags


# ---------------------------------------------------------------------------
# Poisson moment main terms.

def poisson_lowk_main(k: int, lam) -> AsymptoticValue:
    """mu_k + k(k-1) mu_{k-1} / (6 sqrt(lam)), valid for 1 <= k <= A lam^(1/3).

    Error term: k^3/lam.
    """
    lam = mpf(lam)
    if not 1 <= k or k > RANGE_A * lam ** (mpf(1) / 3):
        raise RangeGuardError(f"need 1 <= k <= A lam^(1/3), got k={k}, lam={lam}")
    main = gaussian_mu(k) + k * (k - 1) * gaussian_mu(k - 1) / (6 * mpmath.sqrt(lam))
    return AsymptoticValue(main=main, predicted_relative_error=mpf(k) ** 3 / lam, formula_id="P1")


def poisson_parity_main(k: int, lam) -> AsymptoticValue:
    """(M_k/2) e^{lam(e^r - 1 - r - r^2/2)} (1 + (-1)^k e^{lam(e^{-r} - e^r + 2r)}), r = sqrt(k/lam).

    Error term: k^2/lam + r + 1/k.  The parity bracket is a near-cancelling
    difference for odd k at small r; such values carry a "cancellation" flag.
    """
    lam = mpf(lam)
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A lam, got k={k}, lam={lam}")
    r = mpmath.sqrt(mpf(k) / lam)
    er, emr = mpmath.exp(r), mpmath.exp(-r)
    envelope = gaussian_M(k) / 2 * mpmath.exp(lam * (er - 1 - r - r**2 / 2))
    parity = mpmath.exp(lam * (emr - er + 2 * r))
    bracket, flags = _bracket(mp.one, (-1) ** k * parity)
    err = mpf(k) ** 2 / lam + r + mpf(1) / k
    return AsymptoticValue(main=envelope * bracket, predicted_relative_error=err,
                           formula_id="P2", flags=flags)


def poisson_saddle_main(k: int, lam) -> AsymptoticValue:
    """(M_k/2) exp(kS)/sqrt(s) with S, s from the saddle solution.

    Error term: 1/k + exp(-k^(3/2)/sqrt(lam)).
    """
    lam = mpf(lam)
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A lam, got k={k}, lam={lam}")
    sol = solve_saddle(k, lam)
    main = gaussian_M(k) / 2 * mpmath.exp(k * sol.S) / mpmath.sqrt(sol.s)
    err = mpf(1) / k + mpmath.exp(-mpf(k) ** mpf("1.5") / mpmath.sqrt(lam))
    return AsymptoticValue(main=main, predicted_relative_error=err, formula_id="P3")


def poisson_shift_factor(k: int, lam, lam_prime) -> mpf:
    """e^{(lam - lam')(e^r - r - 1)} with r the saddle for (k, lam).

    Relates E(X(lam) - lam)^k to E(X(lam') - lam')^k for |lam - lam'| <= A.
    """
    lam, lam_prime = mpf(lam), mpf(lam_prime)
    if abs(lam - lam_prime) > RANGE_A:
        raise RangeGuardError(f"|lam - lam'| = {abs(lam - lam_prime)} exceeds A = {RANGE_A}")
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A lam, got k={k}, lam={lam}")
    sol = solve_saddle(k, lam)
    return mpmath.exp((lam - lam_prime) * (mpmath.exp(sol.r) - sol.r - 1))


# ---------------------------------------------------------------------------
# omega(n) moment main terms; the centering is log log x + T with |T| <= A.

def omega_lowk_main(k: int, T, x=None, loglog_x=None) -> AsymptoticValue:
    """mu_k + (k(k-1)/6 + k(a - T)) mu_{k-1}/sqrt(lam), lam = log log x.

    Error term (absolute): M_k (k^3/lam)^(1 + 1/2 if k odd); reported
    relative to |main| (infinite when the main term vanishes).
    """
    lam = _loglog(x, loglog_x)
    T = mpf(T)
    if abs(T) > RANGE_A:
        raise RangeGuardError(f"|T| = {abs(T)} exceeds A = {RANGE_A}")
    if not 1 <= k or k > RANGE_A * lam ** (mpf(1) / 3):
        raise RangeGuardError(f"need 1 <= k <= A (log log x)^(1/3), got k={k}, lam={lam}")
    a = mertens_a()
    main = gaussian_mu(k) + (mpf(k) * (k - 1) / 6 + k * (a - T)) * gaussian_mu(k - 1) / mpmath.sqrt(lam)
    expo = 1 + (mpf(1) / 2 if k % 2 else 0)
    err_abs = gaussian_M(k) * (mpf(k) ** 3 / lam) ** expo
    flags: tuple = ()
    if main == 0:
        rel = mp.inf
        flags = ("zero_main",)
    else:
        rel = err_abs / abs(main)
    return AsymptoticValue(main=main, predicted_relative_error=rel, formula_id="P5", flags=flags)


def omega_parity_main(k: int, T, x=None, loglog_x=None) -> AsymptoticValue:
    """(M_k/2) (log x)^{e^r-1-r-r^2/2} [F(e^r) e^{-rT} + (-1)^k F(e^{-r}) e^{rT} (log x)^{e^{-r}-e^r+2r}].

    r = sqrt(k/lam); powers of log x are exp(lam * ...).  Error term:
    k^2/lam + r + 1/k.
    """
    lam = _loglog(x, loglog_x)
    T = mpf(T)
    if abs(T) > RANGE_A:
        raise RangeGuardError(f"|T| = {abs(T)} exceeds A = {RANGE_A}")
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A log log x, got k={k}, lam={lam}")
    r = mpmath.sqrt(mpf(k) / lam)
    er, emr = mpmath.exp(r), mpmath.exp(-r)
    envelope = gaussian_M(k) / 2 * mpmath.exp(lam * (er - 1 - r - r**2 / 2))
    plus = F(er) * mpmath.exp(-r * T)
    minus = (-1) ** k * F(emr) * mpmath.exp(r * T) * mpmath.exp(lam * (emr - er + 2 * r))
    bracket, flags = _bracket(plus, minus)
    err = mpf(k) ** 2 / lam + r + mpf(1) / k
    return AsymptoticValue(main=envelope * bracket, predicted_relative_error=err,
                           formula_id="P6", flags=flags)


def omega_saddle_main(k: int, T, x=None, loglog_x=None) -> AsymptoticValue:
    """(M_k/2) exp(kS)/sqrt(s) * F(e^r)/e^{rT} with the saddle at lam = log log x.

    Error term: 1/k + exp(-k^(3/2)/sqrt(lam)).
    """
    lam = _loglog(x, loglog_x)
    T = mpf(T)
    if abs(T) > RANGE_A:
        raise RangeGuardError(f"|T| = {abs(T)} exceeds A = {RANGE_A}")
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A log log x, got k={k}, lam={lam}")
    sol = solve_saddle(k, lam)
    main = (gaussian_M(k) / 2 * mpmath.exp(k * sol.S) / mpmath.sqrt(sol.s)
            * F(mpmath.exp(sol.r)) * mpmath.exp(-sol.r * T))
    err = mpf(1) / k + mpmath.exp(-mpf(k) ** mpf("1.5") / mpmath.sqrt(lam))
    return AsymptoticValue(main=main, predicted_relative_error=err, formula_id="P7")


# ---------------------------------------------------------------------------
# Poisson-binomial main terms.  The probability stream is folded in log form
# and never materialized; pass a callable returning a fresh iterable when the
# stream cannot be re-iterated (two passes are needed: lam first, products
# second).

def _pb_stream(p) -> Iterable:
    return p() if callable(p) else p


def _pb_lambda_Lambda(p) -> tuple[mpf, mpf]:
    lam = mp.zero
    Lam = mp.zero
    for p_i in _pb_stream(p):
        p_i = to_mpf(p_i)
        if not (0 <= p_i <= 1):
            raise DomainError(f"probabilities must lie in [0, 1], got {p_i}")
        lam += p_i
        Lam += p_i * p_i
    return lam, Lam


def _pb_log_product(p, w) -> mpf:
    """log prod_i (1 + p_i w) / e^{p_i w} = sum_i (log(1 + p_i w) - p_i w), w = e^r - 1."""
    acc = mp.zero
    for p_i in _pb_stream(p):
        p_i = to_mpf(p_i)
        if p_i:
            acc += mpmath.log(1 + p_i * w) - p_i * w
    return acc


def pb_lowk_main(p, k: int, lam=None, Lam=None) -> AsymptoticValue:
    """Poisson-binomial analogue of the low-k main term; error k^3/lam + k Lam/lam."""
    if lam is None or Lam is None:
        lam, Lam = _pb_lambda_Lambda(p)
    lam, Lam = mpf(lam), mpf(Lam)
    if not 1 <= k or k > RANGE_A * lam ** (mpf(1) / 3):
        raise RangeGuardError(f"need 1 <= k <= A lam^(1/3), got k={k}, lam={lam}")
    if Lam > 0 and k > RANGE_A * lam / Lam:
        raise RangeGuardError(f"need k <= A lam/Lambda, got k={k}, lam/Lambda={lam / Lam}")
    main = gaussian_mu(k) + k * (k - 1) * gaussian_mu(k - 1) / (6 * mpmath.sqrt(lam))
    err = mpf(k) ** 3 / lam + k * Lam / lam
    return AsymptoticValue(main=main, predicted_relative_error=err, formula_id="P8")


def pb_parity_main(p, k: int) -> AsymptoticValue:
    """Parity-bracket main term with the Bernoulli correction products at r = sqrt(k/lam).

    Error term: (k^2 + Lambda)/lam + r + 1/k.
    """
    lam, Lam = _pb_lambda_Lambda(p)
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A lam, got k={k}, lam={lam}")
    r = mpmath.sqrt(mpf(k) / lam)
    er, emr = mpmath.exp(r), mpmath.exp(-r)
    envelope = gaussian_M(k) / 2 * mpmath.exp(lam * (er - 1 - r - r**2 / 2))
    plus = mpmath.exp(_pb_log_product(p, er - 1))
    minus = ((-1) ** k * mpmath.exp(_pb_log_product(p, emr - 1))
             * mpmath.exp(lam * (emr - er + 2 * r)))
    bracket, flags = _bracket(plus, minus)
    err = (mpf(k) ** 2 + Lam) / lam + r + mpf(1) / k
    return AsymptoticValue(main=envelope * bracket, predicted_relative_error=err,
                           formula_id="P8", flags=flags)


def pb_saddle_main(p, k: int) -> AsymptoticValue:
    """(M_k/2) exp(kS)/sqrt(s) * prod_i (1 + p_i(e^r - 1))/e^{p_i(e^r - 1)} at the saddle r.

    Error term: 1/k + exp(-k^(3/2)/sqrt(lam)).
    """
    lam, _ = _pb_lambda_Lambda(p)
    if not 1 <= k or k > RANGE_A * lam:
        raise RangeGuardError(f"need 1 <= k <= A lam, got k={k}, lam={lam}")
    sol = solve_saddle(k, lam)
    corr = mpmath.exp(_pb_log_product(p, mpmath.exp(sol.r) - 1))
    main = gaussian_M(k) / 2 * mpmath.exp(k * sol.S) / mpmath.sqrt(sol.s) * corr
    err = mpf(1) / k + mpmath.exp(-mpf(k) ** mpf("1.5") / mpmath.sqrt(lam))
    return AsymptoticValue(main=main, predicted_relative_error=err, formula_id="P8")


def coefficient_moment_expansion(b, lam, k: int, m: int) -> mpf:
    """lam^(k/2) sum_{j<=m} b_j k!/(k-j)! lam^(-j/2) mu_{k-j}.

    The truncated Gaussian-moment expansion of k! a_k for a series written as
    exp(lam z^2/2) * sum_j b_j z^j; exact when m = k and b covers every
    coefficient of the cofactor.
    """
    if m > k:
        raise DomainError(f"need m <= k, got m={m}, k={k}")
    lam = mpf(lam)
    acc = mp.zero
    fall = mp.one  # k!/(k-j)!
    for j in range(min(m, len(b) - 1) + 1):
        bj = b[j]
        if bj != 0:
            acc += mpf(bj) * fall * lam ** (-mpf(j) / 2) * gaussian_mu(k - j)
        fall *= k - j
    return lam ** (mpf(k) / 2) * acc


# ---------------------------------------------------------------------------
# Two-sided comparison rows for the headline asymptotic equivalences.

def theorem_ratios(which: str, hist=None, lam=None, k_values=None, p_stream=None) -> list:
    """Rows comparing an exact moment against one asymptotic equivalence.

    which selects the comparison:
      T1_poisson   sieved E(omega - loglog x - a)^k  vs  F(e^r)/e^{ra} * Poisson moment
      T1_bernoulli sieved E(omega - sum 1/p)^k       vs  e^{-gamma(e^r-1)}/Gamma(e^r) * PB moment
      T2           sieved normalized moments         vs  the three omega main-term shapes (T2a/b/c)
      T3           Poisson normalized moments        vs  the three Poisson shapes (T3a/b/c)
      T4           Poisson-binomial moments          vs  Poisson moments (ratio -> 1)

    T1/T2 need a histogram; T3 needs lam; T4 needs a probability stream.
    Returns report rows (exact, asymptotic, ratio, error term at constant 1).
    """
    from .report import make_row
    from . import exactmoments as em

    if k_values is None:
        raise DomainError("theorem_ratios needs k_values")
    rows = []

    if which == "T1_poisson":
        if hist is None:
            raise DomainError("T1_poisson needs a histogram")
        lam_x = mpmath.log(mpmath.log(mpf(hist.x)))
        a = mertens_a()
        for k in k_values:
            sol = solve_saddle(k, lam_x)
            factor = F(mpmath.exp(sol.r)) * mpmath.exp(-sol.r * a)
            sieved = em.omega_central_moment(hist, lam_x + a, k)
            poisson = em.shifted_central_moment(em.poisson_central_moments(lam_x, k), 0)
            rows.append(make_row(
                "T1a", "omega", hist.x, k, "loglogx_plus_a",
                exact=sieved, asymptotic=factor * poisson,
                predicted_error=mpf(1) / k + sol.r,
            ))
        return rows

    if which == "T1_bernoulli":
        if hist is None:
            raise DomainError("T1_bernoulli needs a histogram")
        from .primes import iter_prime_blocks, prime_reciprocal_sum

        lam_x = mpmath.log(mpmath.log(mpf(hist.x)))
        sums = prime_reciprocal_sum(hist.x)
        center = sums.reciprocal_sum

        def stream():
            for block in iter_prime_blocks(hist.x):
                for prime in block.tolist():
                    yield mpf(1) / prime

        kmax = max(k_values)
        pb_central = em.poisson_binomial_central_moments(stream(), kmax)
        for k in k_values:
            sol = solve_saddle(k, lam_x)
            er = mpmath.exp(sol.r)
            factor = mpmath.exp(-mp.euler * (er - 1)) / _gamma_pos(er)
            sieved = em.omega_central_moment(hist, center, k)
            rows.append(make_row(
                "T1b", "omega", hist.x, k, "mertens_sum",
                exact=sieved, asymptotic=factor * pb_central[k],
                predicted_error=mpf(1) / k + sol.r,
            ))
        return rows

    if which == "T2":
        if hist is None:
            raise DomainError("T2 needs a histogram")
        lam_x = mpmath.log(mpmath.log(mpf(hist.x)))
        sq = mpmath.sqrt(lam_x)
        for k in k_values:
            sieved = em.omega_central_moment(hist, lam_x, k) / lam_x ** (mpf(k) / 2)
            kk = mpf(k)
            forms = []
            if k <= RANGE_A * lam_x ** (mpf(1) / 3):
                v = omega_lowk_main(k, 0, loglog_x=lam_x)
                forms.append(("T2a", v.main, v.predicted_relative_error, v.flags))
            grow = kk ** mpf("1.5") / sq
            parity = mpf(1) + (-1) ** k * mpmath.exp(-grow / 3)
            forms.append(("T2b", gaussian_M(k) / 2 * mpmath.exp(grow / 6) * parity,
                          kk**2 / lam_x + mpmath.sqrt(kk / lam_x) + 1 / kk, ()))
            r = mpmath.sqrt(kk / lam_x)
            forms.append(("T2c",
                          gaussian_M(k) / 2 * mpmath.exp(lam_x * (mpmath.exp(r) - 1 - r - r**2 / 2)),
                          kk**2 / lam_x + r + 1 / kk, ()))
            for fid, main, err, flags in forms:
                rows.append(make_row(fid, "omega", hist.x, k, "loglogx",
                                     exact=sieved, asymptotic=main,
                                     predicted_error=err, flags=flags))
        return rows

    if which == "T3":
        if lam is None:
            raise DomainError("T3 needs lam")
        lam = mpf(lam)
        sq = mpmath.sqrt(lam)
        kmax = max(k_values)
        central = em.poisson_central_moments(lam, kmax) if _is_exactable(lam) else None
        for k in k_values:
            kk = mpf(k)
            exact = (central[k] if central is not None
                     else em.poisson_central_moment(lam, k)) / lam ** (kk / 2)
            forms = []
            if k <= RANGE_A * lam ** (mpf(1) / 3):
                v = poisson_lowk_main(k, lam)
                forms.append(("T3a", v.main, v.predicted_relative_error, v.flags))
            grow = kk ** mpf("1.5") / sq
            parity = mpf(1) + (-1) ** k * mpmath.exp(-grow / 3)
            forms.append(("T3b", gaussian_M(k) / 2 * mpmath.exp(grow / 6) * parity,
                          kk**2 / lam + mpmath.sqrt(kk / lam) + 1 / kk, ()))
            v = poisson_parity_main(k, lam)
            forms.append(("T3c", v.main, v.predicted_relative_error, v.flags))
            for fid, main, err, flags in forms:
                rows.append(make_row(fid, f"poisson({fmt_short(lam)})", lam, k, "lambda",
                                     exact=exact, asymptotic=main,
                                     predicted_error=err, flags=flags))
        return rows

    if which == "T4":
        if p_stream is None or lam is None:
            raise DomainError("T4 needs a probability stream and lam")
        lam = mpf(lam)
        kmax = max(k_values)
        pb = em.poisson_binomial_central_moments(_pb_stream(p_stream), kmax)
        po = em.poisson_central_moments(lam, kmax)
        _, Lam = _pb_lambda_Lambda(p_stream)
        for k in k_values:
            rows.append(make_row(
                "T4", "poisson_binomial", lam, k, "lambda",
                exact=pb[k], asymptotic=po[k],
                predicted_error=(mpf(k) ** 3 + k * Lam) / lam,
            ))
        return rows

    raise DomainError(f"unknown comparison {which!r}")


def _gamma_pos(z):
    from .numerics import gamma

    return gamma(z)


def _is_exactable(lam) -> bool:
    return True  # poisson_central_moments converts any binary value exactly


def fmt_short(v) -> str:
    return mpmath.nstr(mpf(v), 6)
