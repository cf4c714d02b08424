import random
from fractions import Fraction

import mpmath
import pytest
from mpmath import mp, mpf

from ekmoments import asymptotics as asy
from ekmoments import exactmoments as em
from ekmoments import eulerprod, series
from ekmoments.errors import RangeGuardError
from ekmoments.numerics import gaussian_M, gaussian_mu


def test_saddle_r_equals_1_at_ratio_e_minus_1():
    lam = mpf(100) / (mp.e - 1)
    sol = asy.solve_saddle(100, lam)
    assert abs(sol.r - 1) < mpf("1e-40")


def test_saddle_small_ratio_limit():
    # r(e^r - 1) ~ r^2 as r -> 0
    sol = asy.solve_saddle(1, 10**6)
    ratio = sol.r / mpmath.sqrt(mpf(1) / 10**6)
    assert abs(ratio - 1) < mpf("1e-3")


def test_saddle_s1_near_r_over_6():
    sol = asy.solve_saddle(100, 10**4)
    assert mpf("0.9") <= sol.S1 / (sol.r / 6) <= mpf("1.1")


def test_saddle_residual_random_sweep():
    rng = random.Random(20240517)
    tol = mpf(10) ** (-(mp.dps - 10))
    for _ in range(10**4):
        k = rng.randint(1, 10**4)
        lam = mpf(rng.uniform(0.5, 10**6))
        if k > 50 * lam:  # keep k/lam within the configured range
            continue
        sol = asy.solve_saddle(k, lam)
        resid = abs(sol.r * (mpmath.exp(sol.r) - 1) - mpf(k) / lam)
        assert resid <= tol * (mpf(k) / lam)


def test_saddle_monotone_in_k():
    lam = mpf(500)
    rs = [asy.solve_saddle(k, lam).r for k in range(1, 200, 5)]
    assert all(a < b for a, b in zip(rs, rs[1:]))


def test_saddle_derived_field_limits():
    # construct k/lam = r(e^r - 1) for r = 1e-4 and check the expansions
    r = mpf("1e-4")
    lam = 1 / (r * (mpmath.exp(r) - 1))
    sol = asy.solve_saddle(1, lam)
    assert abs(sol.r - r) < mpf("1e-30")
    assert abs(sol.b - 1) <= 2 * r
    assert abs(sol.t - 1) <= r
    assert abs(sol.S1 - r / 6) <= r**2
    assert abs(sol.S2 - r**2 / 16) <= 10 * r**3
    assert 0 < sol.t < 1 and sol.b > 1 and sol.s > 0 and sol.S1 > 0 and sol.S2 > 0


def test_saddle_field_invariants_general():
    for k, lam in ((3, 10), (50, 100), (464, 10**4)):
        sol = asy.solve_saddle(k, lam)
        assert 0 < sol.t < 1 and sol.b > 1 and sol.s > 0 and sol.S1 > 0 and sol.S2 > 0


def test_saddle_range_guard():
    with pytest.raises(RangeGuardError):
        asy.solve_saddle(1000, 1)


def test_poisson_lowk_examples():
    assert asy.poisson_lowk_main(2, 100).main == 1
    # k=3: mu_3 = 0, main = 3*2*mu_2/(6 sqrt(lam)) = 1/sqrt(lam)
    assert abs(asy.poisson_lowk_main(3, 100).main - mpf("0.1")) < mpf("1e-40")
    lam, k = 10**6, 10
    exact = em.poisson_central_moment(lam, k) / mpf(lam) ** (mpf(k) / 2)
    v = asy.poisson_lowk_main(k, lam)
    assert abs(exact / v.main - 1) <= 10 * v.predicted_relative_error


def test_poisson_parity_k2():
    lam = 10**6
    exact = em.poisson_central_moment(lam, 2) / mpf(lam)
    v = asy.poisson_parity_main(2, lam)
    assert abs(exact / v.main - 1) <= v.predicted_relative_error


def test_poisson_parity_odd_bracket_below_one():
    # e^{-r} - e^r + 2r < 0, so the odd-k bracket is 1 - (something < 1) in (0, 1)
    v = asy.poisson_parity_main(41, 10**4)
    envelope = gaussian_M(41) / 2 * mpmath.exp(
        mpf(10**4) * (mpmath.exp(mpf("0.0641")) - 1 - mpf("0.0641") - mpf("0.0641") ** 2 / 2))
    assert 0 < v.main
    assert v.main < gaussian_M(41)  # the bracket strictly shrinks the envelope


def test_poisson_parity_cancellation_flag():
    v = asy.poisson_parity_main(3, 10**8)
    assert "cancellation" in v.flags


def test_poisson_parity_oracle_k40():
    lam, k = 10**4, 40
    exact = em.poisson_central_moment(lam, k) / mpf(lam) ** 20
    v = asy.poisson_parity_main(k, lam)
    r = mpmath.sqrt(mpf(k) / lam)
    assert abs(exact / v.main - 1) <= 10 * (mpf(k) ** 2 / lam + r)


def test_poisson_saddle_vs_parity_consistency():
    # the parity form keeps the (-1)^k exp(-k^(3/2)/(3 sqrt(lam))) term that
    # the saddle form absorbs into its error; below the transition that term
    # is the whole difference, so compare po against po2 * (1 + parity)
    lam, k = 10**8, 100
    parity = mpmath.exp(-mpf(k) ** mpf("1.5") / (3 * mpmath.sqrt(mpf(lam))))
    a = asy.poisson_saddle_main(k, lam).main * (1 + (-1) ** k * parity)
    b = asy.poisson_parity_main(k, lam).main
    assert abs(a / b - 1) < mpf("0.02")


def test_poisson_saddle_vs_parity_overlap_grid():
    # cross-formula agreement on k in [lam^0.4, lam^0.45]: the gap is bounded
    # by the residual parity term plus both formulas' error terms
    for lam in (10**6, 10**8):
        lo = int(mpf(lam) ** mpf("0.4"))
        hi = int(mpf(lam) ** mpf("0.45"))
        for k in (lo, (lo + hi) // 2, hi):
            va = asy.poisson_saddle_main(k, lam)
            vb = asy.poisson_parity_main(k, lam)
            parity = mpmath.exp(-mpf(k) ** mpf("1.5") / (3 * mpmath.sqrt(mpf(lam))))
            corrected = va.main * (1 + (-1) ** k * parity)
            allowance = 2 * (va.predicted_relative_error + vb.predicted_relative_error)
            assert abs(corrected / vb.main - 1) <= allowance


def test_poisson_saddle_limits():
    sol = asy.solve_saddle(10, 10**8)
    assert abs(sol.s - 1) < mpf("1e-3")
    assert 10 * sol.S < mpf("0.01")


def test_poisson_saddle_oracle_k464():
    lam, k = 10**4, 464
    exact = em.poisson_central_moment(lam, k) / mpf(lam) ** 232
    v = asy.poisson_saddle_main(k, lam)
    assert abs(exact / v.main - 1) <= mpf("0.1")


def test_shift_factor_identity():
    assert asy.poisson_shift_factor(10, 100, 100) == 1


def test_shift_factor_direct_formula():
    a = mpf("0.2615")
    lam = mpf(40)
    sol = asy.solve_saddle(40, lam)
    expected = mpmath.exp(a * (mpmath.exp(sol.r) - sol.r - 1))
    assert abs(asy.poisson_shift_factor(40, lam, lam - a) - expected) < mpf("1e-40")


@pytest.mark.slow
def test_shift_factor_against_exact_moments():
    lam = 10**4
    lam2 = Fraction(10**4) - Fraction(26, 100)
    k = 400
    factor = asy.poisson_shift_factor(k, lam, mpf(lam2.numerator) / lam2.denominator)
    m1 = em.poisson_central_moment(lam, k)
    m2 = em.poisson_central_moment(lam2, k)
    assert abs(m1 / m2 / factor - 1) < mpf("0.02")


def test_omega_lowk_examples():
    assert asy.omega_lowk_main(2, 0, x=10**8).main == 1
    a = eulerprod.mertens_a()
    lam = mpmath.log(mpmath.log(mpf(10**8)))
    v = asy.omega_lowk_main(3, 0, x=10**8)
    assert abs(v.main - (1 + 3 * a) / mpmath.sqrt(lam)) < mpf("1e-30")


def test_omega_lowk_sieve_gap_within_bound(hist_1e8):
    lam = mpmath.log(mpmath.log(mpf(10**8)))
    k = 4
    sieved = em.omega_central_moment(hist_1e8, lam, k) / lam ** (mpf(k) / 2)
    v = asy.omega_lowk_main(k, 0, x=10**8)
    assert abs(sieved / v.main - 1) <= 20 * v.predicted_relative_error


def test_omega_parity_even_small_r_limit():
    # r -> 0: bracket -> 2 F(1) = 2 and the main term approaches mu_k
    v = asy.omega_parity_main(2, 0, loglog_x=mpf(10**8))
    assert abs(v.main - 1) < mpf("1e-3")


def test_omega_parity_finite_at_desk_scale():
    v = asy.omega_parity_main(3, 0, x=10**8)
    assert mpmath.isfinite(v.main)


def test_omega_saddle_T_shift():
    lam = mpf(50)
    sol = asy.solve_saddle(12, lam)
    v0 = asy.omega_saddle_main(12, 0, loglog_x=lam)
    v1 = asy.omega_saddle_main(12, 1, loglog_x=lam)
    assert abs(v1.main / v0.main - mpmath.exp(-sol.r)) < mpf("1e-45")


def test_omega_saddle_vs_parity_consistency():
    # synthetic scale: x enters only through lam = log log x, so lam = 1e6
    # exercises the chain without a representable x; same parity correction
    # as in the Poisson comparison
    lam, k = mpf(10**6), 251
    parity = mpmath.exp(-mpf(k) ** mpf("1.5") / (3 * mpmath.sqrt(lam)))
    va = asy.omega_saddle_main(k, 0, loglog_x=lam)
    vb = asy.omega_parity_main(k, 0, loglog_x=lam)
    allowance = 2 * (va.predicted_relative_error + vb.predicted_relative_error)
    assert abs(va.main * (1 + (-1) ** k * parity) / vb.main - 1) <= allowance


def test_poisson_parity_odd_main_vanishes_relative_to_M():
    # odd k fixed, lam -> infinity: the bracket closes linearly in the
    # exponent and the main term shrinks relative to M_k
    k = 5
    rel = [asy.poisson_parity_main(k, lam).main / gaussian_M(k) for lam in (10**4, 10**6, 10**8)]
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < mpf("1e-3")


def test_r_bracket_sweep():
    # r / sqrt(k/lam) stays in [0.5, 1] for k <= lam
    for lam in (10, 10**3, 10**6):
        for k in (1, lam // 2, lam):
            if k < 1:
                continue
            sol = asy.solve_saddle(k, lam)
            ratio = sol.r / mpmath.sqrt(mpf(k) / lam)
            assert mpf("0.5") <= ratio <= 1


def test_pb_log_product_zero_probabilities():
    assert mpmath.exp(asy._pb_log_product([0, 0, 0], mp.e - 1)) == 1


def test_pb_log_product_two_halves():
    w = mp.e - 1
    direct = ((1 + w / 2) / mpmath.exp(w / 2)) ** 2
    got = mpmath.exp(asy._pb_log_product([mpf("0.5")] * 2, w))
    assert abs(got - direct) < mpf("1e-12") * direct


def test_pb_lowk_range_guards():
    with pytest.raises(RangeGuardError):
        asy.pb_lowk_main([mpf("0.5")] * 4, 12)  # k > A lam^(1/3)


@pytest.mark.slow
def test_pb_saddle_against_exact_prime_stream():
    from ekmoments.primes import iter_prime_blocks

    x = 10**6

    def stream():
        for block in iter_prime_blocks(x):
            for p in block.tolist():
                yield mpf(1) / p

    k = 20
    exact = em.poisson_binomial_central_moments(stream(), k)[k]
    lam, _ = asy._pb_lambda_Lambda(stream)
    exact_norm = exact / lam ** mpf(10)
    v = asy.pb_saddle_main(stream, k)
    assert abs(exact_norm / v.main - 1) <= mpf(10) / k


def test_theorem_constants_tend_to_one():
    a = eulerprod.mertens_a()
    r = mpf("1e-3")
    c1 = eulerprod.F(mpmath.exp(r)) * mpmath.exp(-r * a)
    c2 = mpmath.exp(-mp.euler * (mpmath.exp(r) - 1)) / mpmath.gamma(mpmath.exp(r))
    assert abs(c1 - 1) <= 10 * r**2
    assert abs(c2 - 1) <= 10 * r**2


def test_theorem_ratios_T3_prefactor_plugin():
    lam, k = 1000, 30
    rows = asy.theorem_ratios("T3", lam=lam, k_values=[k])
    row = next(r for r in rows if r.formula_id == "T3b")
    kk = mpf(k)
    expected = gaussian_M(k) / 2 * mpmath.exp(kk ** mpf("1.5") / (6 * mpmath.sqrt(mpf(lam)))) * (
        1 + mpmath.exp(-kk ** mpf("1.5") / (3 * mpmath.sqrt(mpf(lam)))))
    assert abs(mpf(row.asymptotic) - expected) < mpf("1e-30") * expected


def test_theorem_ratios_T4():
    rows = asy.theorem_ratios("T4", lam=50, k_values=[6], p_stream=[Fraction(1, 100)] * 5000)
    ratio = mpf(rows[0].ratio)
    assert abs(ratio - 1) < mpf("0.05")


def test_theorem_ratios_T1_T2_on_small_sieve(hist_1e6):
    rows = asy.theorem_ratios("T1_poisson", hist=hist_1e6, k_values=[2, 4])
    assert all(mpf(r.ratio) > 0 for r in rows)
    rows = asy.theorem_ratios("T1_bernoulli", hist=hist_1e6, k_values=[2, 4])
    # the Bernoulli-model comparison is the sharper one at desk scale
    for r in rows:
        assert mpf("0.3") <= mpf(r.ratio) <= 3
    rows = asy.theorem_ratios("T2", hist=hist_1e6, k_values=[2, 3])
    assert {r.formula_id for r in rows} >= {"T2a", "T2b", "T2c"}


def test_cortech_b0_even_k():
    lam = mpf(9)
    # single coefficient b = (1): lam^{k/2} mu_k
    for k in (2, 6):
        got = asy.coefficient_moment_expansion([1], lam, k, 0)
        assert got == mpf(lam) ** (mpf(k) / 2) * gaussian_mu(k)


def test_cortech_m3_odd_k_against_exact():
    lam, k = 100, 9
    b = [1, 0, 0, mpf(lam) / 6]
    approx = asy.coefficient_moment_expansion(b, lam, k, 3)
    exact = em.poisson_central_moment(lam, k)
    # remainder term of the truncated expansion, evaluated with constant 10:
    # (k!/(k-4)!) lam^{-2} M_{k-4} max |H1^{(4)}| / 4! on |z| = sqrt((k-4)/lam)
    K = 40
    h1 = series.to_mpf_series(
        series.series_exp(series.exp_z_minus(series.EXP_MINUS_Z2_Z_1, K) * lam))
    d4 = [h1[j] * j * (j - 1) * (j - 2) * (j - 3) for j in range(4, K + 1)]
    radius = mpmath.sqrt(mpf(k - 4) / lam)
    circle_max = mp.zero
    for idx in range(64):
        z = radius * mpmath.expjpi(2 * mpf(idx) / 64)
        val = sum(d4[j - 4] * z ** (j - 4) for j in range(4, K + 1))
        valm = sum(d4[j - 4] * (-z) ** (j - 4) for j in range(4, K + 1))
        circle_max = max(circle_max, abs(val + (-1) ** k * valm))
    fall = mpf(1)
    for j in range(4):
        fall *= k - j
    E = fall * mpf(lam) ** mpf(-2) * gaussian_M(k - 4) * circle_max / 24
    assert abs(exact - approx) <= 10 * mpf(lam) ** (mpf(k) / 2) * E


def test_range_guards_raise():
    with pytest.raises(RangeGuardError):
        asy.poisson_lowk_main(100, 100)
    with pytest.raises(RangeGuardError):
        asy.omega_lowk_main(2, 5, x=10**8)  # |T| > A
    with pytest.raises(RangeGuardError):
        asy.poisson_shift_factor(10, 100, 90)  # |lam - lam'| > A
