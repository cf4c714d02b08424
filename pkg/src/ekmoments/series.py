"""Truncated power series arithmetic and coefficient extraction.

Two independent routes to the k-th coefficient of an analytic function are
implemented: exact truncated-series algebra (products, exp, composition with
e^z - 1) and a trapezoidal contour rule on a circle, which is spectrally
accurate for entire functions.  The two routes cross-validate each other;
``delange_coefficient`` pairs them to produce the main term of the k-th
normalized centered moment of omega(n).

Series coefficients are duck-typed: mpmath mpf values at working precision,
or Fractions when the caller wants exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from mpmath import mp, mpf, mpc
import mpmath

from .errors import DomainError, NonConvergenceError, PrecisionFailure
from .numerics import to_mpf
from . import eulerprod

EXP_MINUS_1 = "e^z-1"
EXP_MINUS_Z_1 = "e^z-z-1"
EXP_MINUS_Z2_Z_1 = "e^z-z^2/2-z-1"

_CONTOUR_NODE_CAP = 2**18
_CONTOUR_REL_TOL_EXP = -12


class TruncatedSeries:
    """Coefficients c_0..c_K of a formal power series, closed at order K."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence, order: int | None = None):
        coeffs = list(coeffs)
        if order is None:
            if not coeffs:
                raise DomainError("need coefficients or an explicit order")
            order = len(coeffs) - 1
        if order < 0:
            raise DomainError(f"order must be >= 0, got {order}")
        if len(coeffs) < order + 1:
            coeffs = coeffs + [0] * (order + 1 - len(coeffs))
        self.coeffs = coeffs[: order + 1]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        K = min(self.order, other.order)
        return TruncatedSeries([self.coeffs[i] + other.coeffs[i] for i in range(K + 1)])

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        K = min(self.order, other.order)
        return TruncatedSeries([self.coeffs[i] - other.coeffs[i] for i in range(K + 1)])

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries([c * other for c in self.coeffs])
        K = min(self.order, other.order)
        out = [0] * (K + 1)
        for i, ci in enumerate(self.coeffs[: K + 1]):
            if ci == 0:
                continue
            for j in range(K + 1 - i):
                cj = other.coeffs[j]
                if cj != 0:
                    out[i + j] = out[i + j] + ci * cj
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TruncatedSeries(order={self.order}, coeffs={self.coeffs!r})"


def series_exp(f: TruncatedSeries) -> TruncatedSeries:
    """exp of a truncated series, exact at fixed precision.

    Standard recurrence n*g_n = sum_{m=1..n} m f_m g_{n-m} from g' = f' g.
    A nonzero constant term is factored out first: exp(f) = e^{c_0} exp(f - c_0),
    which keeps the recurrence itself exact (and rational for rational input
    with c_0 = 0).
    """
    K = f.order
    c0 = f.coeffs[0]
    g = [0] * (K + 1)
    g[0] = 1 if c0 == 0 else mpmath.exp(mpf(c0))
    for n in range(1, K + 1):
        acc = 0
        for m in range(1, n + 1):
            fm = f.coeffs[m]
            if fm != 0:
                acc = acc + m * fm * g[n - m]
        g[n] = acc / n if not isinstance(acc, int) else _div(acc, n)
    return TruncatedSeries(g)


def _div(acc, n):
    # keep integer-seeded series exact by promoting to Fraction only when needed
    if acc % n == 0:
        return acc // n
    from fractions import Fraction

    return Fraction(acc, n)


def exp_z_minus(kind: str, K: int) -> TruncatedSeries:
    """Series of e^z with the named low-order terms removed, exact 1/j! entries.

    kind is one of "e^z-1", "e^z-z-1", "e^z-z^2/2-z-1".
    """
    from fractions import Fraction

    drop = {EXP_MINUS_1: 1, EXP_MINUS_Z_1: 2, EXP_MINUS_Z2_Z_1: 3}
    if kind not in drop:
        raise DomainError(f"unknown kind {kind!r}")
    start = drop[kind]
    coeffs = [Fraction(0)] * (K + 1)
    for j in range(start, K + 1):
        coeffs[j] = Fraction(1, math.factorial(j))
    return TruncatedSeries(coeffs)


def to_mpf_series(f: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries([to_mpf(c) for c in f.coeffs])


def compose_polynomial(poly: Sequence, w: TruncatedSeries) -> TruncatedSeries:
    """P(w(z)) for a polynomial P = sum_m poly[m] * w^m; requires w(0) = 0."""
    if w.coeffs[0] != 0:
        raise DomainError("composition requires vanishing constant term")
    K = w.order
    out = TruncatedSeries([poly[-1]], order=K)
    for m in range(len(poly) - 2, -1, -1):
        out = out * w
        out = TruncatedSeries([out.coeffs[0] + poly[m]] + out.coeffs[1:])
    return out


@dataclass(frozen=True)
class CoefficientResult:
    """k! times the k-th coefficient, with the extraction route and error estimate."""

    k: int
    value: mpf
    method: str  # "series" | "contour"
    est_error: mpf


def _contour_sum(H: Callable, r, k: int, nodes: int) -> tuple:
    total = mpc(0)
    peak = mp.zero
    for j in range(nodes):
        rot = mpmath.expjpi(2 * mpf(j) / nodes)
        value = H(r * rot)
        peak = max(peak, abs(value))
        total += value * mpmath.expjpi(-2 * mpf(j * k) / nodes)
    return total / nodes / r**k, peak / r**k


def contour_coefficient(H: Callable, r, k: int, nodes: int | None = None) -> CoefficientResult:
    """k! a_k for H(z) = sum a_k z^k via the trapezoidal rule on |z| = r.

    The rule is spectrally accurate for H analytic on the closed disk; nodes
    are doubled until two successive estimates agree to 1e-12 relative (cap
    2^18, else NonConvergenceError).  For real-coefficient H the imaginary
    part must be below 10^-(dps-10) relative; it is checked and discarded.
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    r = mpf(r)
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    if nodes is None:
        n = 1 << (max(256, 8 * k) - 1).bit_length()
    else:
        if nodes & (nodes - 1) or nodes < max(4 * k, 4):
            raise DomainError(f"nodes must be a power of 2 >= max(4k, 4), got {nodes}")
        n = nodes

    tol = mpf(10) ** _CONTOUR_REL_TOL_EXP
    imag_tol = mpf(10) ** (-(mp.dps - 10))
    with mp.workdps(mp.dps + 15):
        prev, peak = _contour_sum(H, r, k, n)
        while True:
            n *= 2
            if n > _CONTOUR_NODE_CAP:
                raise NonConvergenceError(
                    f"contour rule did not converge below {tol} within {_CONTOUR_NODE_CAP} nodes"
                )
            cur, peak = _contour_sum(H, r, k, n)
            # rounding floor: the alternating sum cannot resolve below the
            # largest integrand sample times the working epsilon
            floor = peak * mpf(10) ** (-(mp.dps - 8))
            diff = abs(cur - prev)
            if diff <= tol * abs(cur) or (abs(cur) <= floor and abs(prev) <= floor):
                break
            prev = cur
        fact = mpmath.factorial(k)
        value = fact * cur
        est = fact * max(abs(cur - prev), floor)
        noise = fact * floor
    if abs(value.imag) > max(imag_tol * abs(value.real), noise):
        raise PrecisionFailure(
            f"contour result has imaginary part {value.imag} beyond tolerance; "
            "H may not have real coefficients or needs a different radius"
        )
    return CoefficientResult(k=k, value=+value.real, method="contour", est_error=+est)


def _saddle_radius(k: int, lam) -> mpf:
    """Positive solution of r(e^r - 1) = k/lam (local Newton; conditioning radius)."""
    target = mpf(max(k, 1)) / mpf(lam)
    r = mpmath.sqrt(target)
    for _ in range(100):
        er = mpmath.exp(r)
        step = (r * (er - 1) - target) / (er - 1 + r * er)
        r -= step
        if abs(step) < abs(r) * mpf(10) ** (-(mp.dps - 10)):
            break
    return r


def delange_coefficient(
    x,
    T,
    k: int,
    K: int,
    loglog_x=None,
    taylor_tol=mpf("0.05"),
) -> CoefficientResult:
    """k! A_{k,T}(x): k! times the z^k coefficient of e^{-zT} F(e^z) (log x)^{e^z - z - 1}.

    This is the main term of the k-th normalized centered moment of omega
    (centering log log x + T).  The series is built at order K: F(e^z) is the
    degree-K Taylor polynomial of F about 1 composed with e^z - 1, and
    (log x)^{e^z-z-1} = exp(lam * (e^z-z-1)) with lam = log log x, so x enters
    only through lam (pass loglog_x directly for synthetic scales).

    est_error is |series - contour| + contour doubling error, where the
    contour route evaluates the same F Taylor polynomial on the saddle circle;
    it validates the coefficient extraction, not the F values themselves
    (those are cross-checked against the Meissel-Mertens constant elsewhere).

    Truncating the F Taylor polynomial at order K >= k is exact for the z^k
    coefficient, because composing with e^z - 1 maps the w^m term to order
    z^m and beyond.  The remainder is still measured on the contour circle
    and must stay below taylor_tol relatively, which catches an order K too
    small for the polynomial to represent F where the contour evaluates it.
    """
    if k > K:
        raise DomainError(f"need K >= k, got k={k}, K={K}")
    if loglog_x is not None:
        lam = mpf(loglog_x)
    else:
        lam = mpmath.log(mpmath.log(mpf(x)))
    if not lam > 0:
        raise DomainError("log log x must be positive")
    T = mpf(T)

    fc = eulerprod.f_taylor_at_1(K)

    # series route
    ez1 = to_mpf_series(exp_z_minus(EXP_MINUS_1, K))
    ezz1 = to_mpf_series(exp_z_minus(EXP_MINUS_Z_1, K))
    log_power = series_exp(ezz1 * lam)
    shift = series_exp(TruncatedSeries([mp.zero, -T], order=K))
    f_of_ez = compose_polynomial(fc, ez1)
    H = log_power * shift * f_of_ez
    value = mpmath.factorial(k) * H[k]

    # contour cross-check on the saddle circle, sharing the F polynomial
    r = _saddle_radius(k, lam)
    w_edge = mpmath.exp(r) - 1
    tail = abs(eulerprod.F(1 + w_edge) - _polyval(fc, w_edge))
    scale = max(abs(_polyval(fc, w_edge)), mpf(1))
    if tail > taylor_tol * scale:
        raise PrecisionFailure(
            f"F Taylor remainder {tail} at order {K} exceeds tolerance on |w|={w_edge}"
        )

    def H_fn(z):
        return mpmath.exp(-z * T) * _polyval(fc, mpmath.exp(z) - 1) * mpmath.exp(
            lam * (mpmath.exp(z) - z - 1)
        )

    check = contour_coefficient(H_fn, r, k)
    est = abs(value - check.value) + check.est_error
    return CoefficientResult(k=k, value=value, method="series", est_error=est)


def _polyval(coeffs: Sequence, w):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * w + c
    return acc
