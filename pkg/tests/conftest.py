"""Shared fixtures: precision hygiene and session-scoped histograms."""

import pytest
from mpmath import mp

from ekmoments import numerics, primes, suites


@pytest.fixture(autouse=True)
def _restore_precision():
    saved = mp.dps
    yield
    mp.dps = saved


@pytest.fixture(scope="session")
def hist_1e5():
    return primes.sieve_omega_histogram(10**5)


@pytest.fixture(scope="session")
def hist_1e6():
    return suites._get_hist(10**6)


@pytest.fixture(scope="session")
def hist_1e8():
    # shared with the acceptance suite through the suites memo
    return suites._get_hist(10**8)


def omega_by_trial_division(x: int) -> dict:
    """Independent oracle: count distinct prime factors of each n by trial division."""
    counts: dict = {}
    small = [p for p in range(2, 1100) if all(p % q for q in range(2, int(p**0.5) + 1))]
    for n in range(1, x + 1):
        m = 0
        cof = n
        for p in small:
            if p * p > cof:
                break
            if cof % p == 0:
                m += 1
                while cof % p == 0:
                    cof //= p
        if cof > 1:
            m += 1
        counts[m] = counts.get(m, 0) + 1
    return counts
