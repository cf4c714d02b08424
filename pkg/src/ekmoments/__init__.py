"""ekmoments: exact and asymptotic centered moments of omega(n), Poisson and
Poisson-binomial distributions, with every comparison checkable at desk scale.

Importing the package sets the mpmath working precision to 50 decimal digits;
override with ekmoments.set_working_dps.
"""

from .numerics import (
    DEFAULT_DPS,
    GaussianMoments,
    HighPrecisionReal,
    gamma,
    gaussian_M,
    gaussian_moment,
    gaussian_mu,
    log_stirling_check,
    set_working_dps,
    working_dps,
)
from .primes import (
    OmegaHistogram,
    PrimeSums,
    get_or_build_histogram,
    load_histogram,
    meissel_mertens,
    prime_reciprocal_sum,
    save_histogram,
    selberg_mean,
    sieve_omega_histogram,
)
from .eulerprod import EulerProductValue, F, F_prime_at_1, eval_F, f_taylor_at_1, mertens_a
from .series import (
    CoefficientResult,
    TruncatedSeries,
    contour_coefficient,
    delange_coefficient,
    exp_z_minus,
    series_exp,
)
from .exactmoments import (
    CenteringSpec,
    MomentQuery,
    exact_moment,
    gaussian_tail_moment,
    interval_probability,
    omega_central_moment,
    poisson_binomial_central_moments,
    poisson_central_moment,
    poisson_central_moments,
    poisson_tail_moment,
)
from .asymptotics import (
    AsymptoticValue,
    SaddleSolution,
    coefficient_moment_expansion,
    omega_lowk_main,
    omega_parity_main,
    omega_saddle_main,
    pb_lowk_main,
    pb_parity_main,
    pb_saddle_main,
    poisson_lowk_main,
    poisson_parity_main,
    poisson_saddle_main,
    poisson_shift_factor,
    solve_saddle,
    theorem_ratios,
)
from .report import MomentReport, ReportRow, make_row

__version__ = "0.1.0"
