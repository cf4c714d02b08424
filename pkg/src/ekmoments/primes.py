"""Segmented sieve for omega(n), prime sums and the Meissel-Mertens constant.

omega(n) counts distinct prime divisors.  The sieve never stores per-n data
beyond one segment: for each base prime p <= sqrt(segment end) it increments
omega for multiples of p and divides p out of a residual cofactor; any n whose
cofactor stays > 1 has exactly one prime factor above sqrt(segment end) and
gets one extra count.  The persistence unit is the histogram
N_m = #{n <= x : omega(n) = m}, from which moments of any centering derive.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from datetime import datetime, timezone
from typing import Iterator

import numpy as np
from mpmath import mp, mpf
import mpmath

from .errors import DomainError, RangeGuardError, ResourceCapError, UnreachablePrecisionError

#: Hard cap on sieve ranges; larger requests raise ResourceCapError.
SIEVE_CAP = 10**10

#: Cap on the prime cutoff used by meissel_mertens.
MEISSEL_PRIME_CAP = 10**9

DEFAULT_BLOCK = 4 * 10**6
MIN_BLOCK = 10**4


@dataclass
class OmegaHistogram:
    """Counts N_m = #{1 <= n <= x : omega(n) = m} for one sieve run.

    Invariants: sum of counts equals x (omega(1) = 0 contributes to N_0) and
    the largest populated m is at most log2(2x).
    """

    x: int
    counts: dict[int, int]
    generated_at: str = ""
    sieve_block: int = 0

    def total(self) -> int:
        return sum(self.counts.values())

    def max_m(self) -> int:
        return max(m for m, c in self.counts.items() if c > 0)


@dataclass(frozen=True)
class PrimeSums:
    """sum_{p <= x} 1/p and its deviation from log log x."""

    x: int
    reciprocal_sum: mpf
    mertens_deviation: mpf


def simple_primes(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (plain Eratosthenes, used for base primes)."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def iter_prime_blocks(limit: int, block: int = 10**7) -> Iterator[np.ndarray]:
    """Yield primes <= limit in consecutive int64 blocks without materializing all of them."""
    if limit < 2:
        return
    base = simple_primes(math.isqrt(limit))
    yield base[base <= limit]
    lo = math.isqrt(limit) + 1
    while lo <= limit:
        hi = min(lo + block, limit + 1)
        mask = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            start = (-lo) % p
            mask[start::p] = False
        yield (lo + np.flatnonzero(mask)).astype(np.int64)
        lo = hi


def _omega_counts_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Histogram of omega over [lo, hi) as a length-64 int64 vector."""
    omega = np.zeros(hi - lo, dtype=np.int8)
    rem = np.arange(lo, hi, dtype=np.int64)
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        omega[(-lo) % p :: p] += 1
        q = p
        while q < hi:
            rem[(-lo) % q :: q] //= p
            q *= p
    # leftover cofactor > 1 is a single prime above sqrt(hi); n=1 keeps rem=1
    omega[rem > 1] += 1
    return np.bincount(omega, minlength=64).astype(np.int64)


def sieve_omega_histogram(x: int, block: int = DEFAULT_BLOCK, n_jobs: int = 1) -> OmegaHistogram:
    """Exact histogram of omega(n) for 1 <= n <= x.

    Memory is O(block + pi(sqrt(x))).  Segments are independent work units;
    with n_jobs > 1 they are processed by a thread pool and merged by exact
    integer addition, so the result is identical for any job count.
    """
    x = int(x)
    if x < 3:
        raise RangeGuardError(f"x must be >= 3, got {x}")
    if x > SIEVE_CAP:
        raise ResourceCapError(f"x={x} exceeds sieve cap {SIEVE_CAP}")
    if block < MIN_BLOCK:
        raise RangeGuardError(f"block must be >= {MIN_BLOCK}, got {block}")

    base = simple_primes(math.isqrt(x))
    segments = [(lo, min(lo + block, x + 1)) for lo in range(1, x + 1, block)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda seg: _omega_counts_segment(seg[0], seg[1], base), segments))
    else:
        parts = [_omega_counts_segment(lo, hi, base) for lo, hi in segments]
    counts_vec = np.sum(parts, axis=0)
    counts = {m: int(c) for m, c in enumerate(counts_vec) if c > 0}
    return OmegaHistogram(
        x=x,
        counts=counts,
        generated_at=datetime.now(timezone.utc).isoformat(),
        sieve_block=block,
    )


def prime_reciprocal_sum(x: int) -> PrimeSums:
    """sum_{p <= x} 1/p to working precision, plus its deviation from log log x.

    The sum is accumulated as exact scaled integers (floor(S/p) with
    S = 10^(dps+10)), so the only error is the final rounding: the total
    floor defect is below pi(x)/S.
    """
    x = int(x)
    if x < 3:
        raise RangeGuardError(f"x must be >= 3, got {x}")
    if x > SIEVE_CAP:
        raise ResourceCapError(f"x={x} exceeds sieve cap {SIEVE_CAP}")
    scale = 10 ** (mp.dps + 10)
    acc = 0
    for blockp in iter_prime_blocks(x):
        for p in blockp.tolist():
            acc += scale // p
    total = mpf(acc) / scale
    return PrimeSums(x=x, reciprocal_sum=total, mertens_deviation=total - mpmath.log(mpmath.log(mpf(x))))


def meissel_mertens(precision_target: int, prime_cutoff: int | None = None) -> mpf:
    """The Meissel-Mertens constant a = gamma + sum_p (log(1 - 1/p) + 1/p).

    Sums the prime series up to a cutoff P and bounds the tail by
    sum_{p > P} |log(1-1/p) + 1/p| <= sum_{n > P} 1/(2n(n-1)) <= 1/P,
    choosing P = 2 * 10^precision_target so tail + summation error stay below
    10^-precision_target.  Primes up to 10^4 are summed in mpmath; larger
    primes use the series -(u^2/2 + u^3/3 + ...) with u = 1/p in float64,
    whose terms are below 5e-9 so the block's absolute error is < 1e-15.
    gamma is mpmath's built-in Euler constant.
    """
    if precision_target < 1:
        raise DomainError("precision_target must be >= 1")
    if precision_target > mp.dps - 5:
        raise DomainError(
            f"precision_target {precision_target} too close to working precision {mp.dps}"
        )
    if prime_cutoff is None:
        prime_cutoff = 2 * 10**precision_target
    if prime_cutoff > MEISSEL_PRIME_CAP:
        raise UnreachablePrecisionError(
            f"prime cutoff {prime_cutoff} for target {precision_target} digits "
            f"exceeds cap {MEISSEL_PRIME_CAP}"
        )
    return _meissel_cached(int(prime_cutoff), mp.dps)


@lru_cache(maxsize=None)
def _meissel_cached(prime_cutoff: int, dps: int) -> mpf:
    exact_below = 10**4
    acc = mp.euler
    tail64 = 0.0
    for blockp in iter_prime_blocks(prime_cutoff):
        small = blockp[blockp <= exact_below]
        for p in small.tolist():
            u = mpf(1) / p
            acc += mpmath.log(1 - u) + u
        large = blockp[blockp > exact_below]
        if large.size:
            u = 1.0 / large.astype(np.float64)
            # log(1-u) + u = -(u^2/2 + u^3/3 + u^4/4 + ...); u <= 1e-4 so 5 terms reach ~1e-22
            s = u * u * (1.0 / 2 + u * (1.0 / 3 + u * (1.0 / 4 + u * (1.0 / 5 + u / 6))))
            tail64 += float(np.sum(s))
    return acc - mpf(tail64)


def selberg_mean(hist: OmegaHistogram, s) -> mpf:
    """E_{n <= x} s^omega(n) = (1/x) sum_m N_m s^m, exactly from the histogram."""
    s = mpf(s)
    total = mp.zero
    for m, c in sorted(hist.counts.items()):
        total += c * s**m
    return total / hist.x


# ---------------------------------------------------------------------------
# Histogram cache: one file per x, header "x=<int>" then "m<TAB>N_m" lines.

def _cache_path(cache_dir: str, x: int) -> str:
    return os.path.join(cache_dir, f"omega_hist_{x}.tsv")


def save_histogram(hist: OmegaHistogram, cache_dir: str) -> str:
    """Write the histogram cache file atomically, guarded by a lock file."""
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, hist.x)
    lock = path + ".lock"
    deadline = time.monotonic() + 10.0
    while True:
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.close(fd)
            break
        except FileExistsError:
            if time.monotonic() > deadline:
                raise ResourceCapError(f"could not acquire cache lock {lock}")
            time.sleep(0.05)
    try:
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(f"x={hist.x}\n")
            for m in sorted(hist.counts):
                fh.write(f"{m}\t{hist.counts[m]}\n")
        os.replace(tmp, path)
    finally:
        os.unlink(lock)
    return path


def load_histogram(path: str) -> OmegaHistogram:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("x="):
            raise ValueError(f"{path}: bad header {header!r}")
        x = int(header[2:])
        counts: dict[int, int] = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            m_str, n_str = line.split("\t")
            counts[int(m_str)] = int(n_str)
    return OmegaHistogram(x=x, counts=counts, generated_at=datetime.now(timezone.utc).isoformat())


def get_or_build_histogram(
    x: int, cache_dir: str | None, block: int = DEFAULT_BLOCK, n_jobs: int = 1
) -> OmegaHistogram:
    """Load the cached histogram for x if present, else sieve and cache it."""
    if cache_dir is not None:
        path = _cache_path(cache_dir, int(x))
        if os.path.exists(path):
            return load_histogram(path)
    hist = sieve_omega_histogram(x, block=block, n_jobs=n_jobs)
    if cache_dir is not None:
        save_histogram(hist, cache_dir)
    return hist
