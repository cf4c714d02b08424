import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from ekmoments import asymptotics, exactmoments, series
from ekmoments.errors import DomainError, PrecisionFailure
from ekmoments.numerics import gaussian_M, gaussian_mu


def test_series_exp_of_z():
    f = series.TruncatedSeries([0, 1], order=4)
    g = series.series_exp(f)
    assert [Fraction(c) for c in g.coeffs] == [1, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24)]


def test_series_exp_of_zero():
    g = series.series_exp(series.TruncatedSeries([0], order=3))
    assert g.coeffs == [1, 0, 0, 0]


def test_series_exp_poisson_mgf_coefficient():
    # z^4 coefficient of exp(lam(e^z - z - 1)) at lam=2 equals m_4/4! = 14/24
    f = series.exp_z_minus(series.EXP_MINUS_Z_1, 4) * 2
    g = series.series_exp(f)
    assert Fraction(g[4]) == Fraction(14, 24)


def test_exp_z_minus_kinds():
    assert [Fraction(c) for c in series.exp_z_minus(series.EXP_MINUS_1, 3).coeffs] == [
        0, 1, Fraction(1, 2), Fraction(1, 6)]
    assert [Fraction(c) for c in series.exp_z_minus(series.EXP_MINUS_Z_1, 3).coeffs] == [
        0, 0, Fraction(1, 2), Fraction(1, 6)]
    assert [Fraction(c) for c in series.exp_z_minus(series.EXP_MINUS_Z2_Z_1, 3).coeffs] == [
        0, 0, 0, Fraction(1, 6)]
    with pytest.raises(DomainError):
        series.exp_z_minus("e^z", 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=8), min_size=1, max_size=6))
def test_exp_of_f_times_exp_of_minus_f_is_one(coeffs):
    coeffs = [Fraction(0)] + coeffs  # keep the constant term zero: exact rational path
    f = series.TruncatedSeries(coeffs)
    g = series.series_exp(f) * series.series_exp(f * Fraction(-1))
    assert Fraction(g[0]) == 1
    assert all(Fraction(c) == 0 for c in g.coeffs[1:])


def test_contour_exp_k3():
    res = series.contour_coefficient(mpmath.exp, 1, 3)
    assert abs(res.value - 1) < mpf("1e-30")
    assert res.method == "contour"


def test_contour_polynomial_degree():
    res = series.contour_coefficient(lambda z: (1 + z) ** 2, 1, 5)
    assert abs(res.value) < mpf("1e-30")


def test_contour_poisson_oracle():
    lam, k = 2, 4
    r = mpmath.sqrt(mpf(k) / lam)
    res = series.contour_coefficient(lambda z: mpmath.exp(lam * (mpmath.exp(z) - z - 1)), r, k)
    assert abs(res.value - 14) < mpf("1e-30")


def test_contour_node_validation():
    with pytest.raises(DomainError):
        series.contour_coefficient(mpmath.exp, 1, 3, nodes=100)  # not a power of 2
    with pytest.raises(DomainError):
        series.contour_coefficient(mpmath.exp, 1, 10, nodes=32)  # below 4k


def test_contour_rejects_complex_coefficients():
    # e^{iz} has coefficient i at z^1, far from real
    with pytest.raises(PrecisionFailure):
        series.contour_coefficient(lambda z: mpmath.exp(mpc_i() * z), 1, 1)


def mpc_i():
    return mpmath.mpc(0, 1)


@pytest.mark.parametrize("lam", [1, 10, 100])
def test_oracle_equivalence_light(lam):
    # criterion-1 shape at reduced range: Stirling route == series route == contour
    central = exactmoments.poisson_central_moments(lam, 12)
    ser = series.series_exp(series.exp_z_minus(series.EXP_MINUS_Z_1, 12) * lam)
    for k in range(2, 13):
        stirling = central[k]
        q = Fraction(ser[k]) * math.factorial(k)
        series_val = mpf(q.numerator) / q.denominator
        r = asymptotics.solve_saddle(k, lam).r
        contour = series.contour_coefficient(
            lambda z: mpmath.exp(lam * (mpmath.exp(z) - z - 1)), r, k).value
        assert abs(series_val / stirling - 1) < mpf("1e-9")
        assert abs(contour / stirling - 1) < mpf("1e-9")


@pytest.mark.parametrize("lam", [10, 100])
def test_coefficient_bound_from_factored_form(lam):
    # |k! a_k| <= C * M_k lam^(k/2) max_{|z|=r} |H1(z) + (-1)^k H1(-z)| with C <= 10,
    # H1 = exp(lam(e^z - z^2/2 - z - 1)), r = sqrt(k/lam), max over 256 samples
    central = exactmoments.poisson_central_moments(lam, 30)

    def H1(z):
        return mpmath.exp(lam * (mpmath.exp(z) - z**2 / 2 - z - 1))

    for k in range(2, 31):
        r = mpmath.sqrt(mpf(k) / lam)
        circle_max = mp.zero
        for j in range(256):
            z = r * mpmath.expjpi(2 * mpf(j) / 256)
            circle_max = max(circle_max, abs(H1(z) + (-1) ** k * H1(-z)))
        bound = 10 * gaussian_M(k) * mpf(lam) ** (mpf(k) / 2) * circle_max
        assert abs(central[k]) <= bound


@pytest.mark.parametrize("lam", [4, 25])
def test_full_expansion_identity(lam):
    # with b_j the coefficients of exp(lam(e^z - z^2/2 - z - 1)) and m = k the
    # Gaussian-moment expansion reproduces the exact moment with no remainder
    K = 12
    b = series.series_exp(series.exp_z_minus(series.EXP_MINUS_Z2_Z_1, K) * lam)
    b_mpf = series.to_mpf_series(b).coeffs
    central = exactmoments.poisson_central_moments(lam, K)
    for k in range(1, K + 1):
        lhs = central[k]
        rhs = asymptotics.coefficient_moment_expansion(b_mpf[: k + 1], lam, k, k)
        assert abs(lhs - rhs) <= mpf("1e-35") * max(1, abs(lhs))


def test_delange_k0_is_1():
    res = series.delange_coefficient(10**6, 0, 0, K=4)
    assert abs(res.value - 1) < mpf("1e-20")


def test_delange_k1_is_mertens_constant():
    from ekmoments.eulerprod import mertens_a

    res = series.delange_coefficient(10**6, 0, 1, K=6)
    assert abs(res.value - mertens_a()) < mpf("1e-6")


def test_delange_T_shift_linear_coefficient():
    from ekmoments.eulerprod import mertens_a

    res = series.delange_coefficient(10**6, 1, 1, K=6)
    assert abs(res.value - (mertens_a() - 1)) < mpf("1e-6")


def test_delange_series_matches_contour():
    res = series.delange_coefficient(10**8, 0, 4, K=8)
    assert res.est_error <= mpf("1e-9") * abs(res.value)


def test_delange_taylor_remainder_guard():
    with pytest.raises(PrecisionFailure):
        series.delange_coefficient(10**8, 0, 1, K=1, taylor_tol=mpf("1e-12"))


def test_compose_polynomial_requires_zero_constant():
    w = series.TruncatedSeries([1, 1], order=3)
    with pytest.raises(DomainError):
        series.compose_polynomial([1, 2], w)
