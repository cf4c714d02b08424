"""Command-line front end: sieves, moment tables, convergence reports.

Subcommands
    sieve       build (and cache) the omega histogram for one x
    poisson     exact Poisson central moments vs their asymptotic main terms
    pb          Poisson-binomial moments from a prime stream or a file of p_i
    omega       sieved omega moments under a chosen centering
    saddle      saddle-point solution r, b, t, S1, S2, S, s for (k, lam)
    delange     series coefficient k! A_{k,T}(x) with its contour cross-check
    transition  exact-to-Gaussian moment ratios across k (Poisson)
    verify      run acceptance grids; exit 0 iff every criterion passes

Global flags: --precision (decimal digits), --format csv|json, --out PATH,
--cache DIR (or EKMOMENTS_CACHE).  Exit codes: 2 usage, 3 range/domain
violation, 4 resource cap, 1 other failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import mpmath
from mpmath import mp, mpf

from . import asymptotics, eulerprod, exactmoments, primes, report, series, suites
from .errors import DomainError, RangeGuardError, ResourceCapError
from .exactmoments import CenteringSpec
from .numerics import gaussian_M, set_working_dps

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RANGE = 3
EXIT_RESOURCE = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--precision", type=int, default=None, metavar="D",
                        help="working precision in decimal digits (default 50)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="write the report here instead of stdout")
    parser.add_argument("--cache", default=None, metavar="DIR",
                        help="histogram cache directory (or $EKMOMENTS_CACHE)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekmoments", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", help="build and cache the omega histogram")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--block", type=int, default=primes.DEFAULT_BLOCK)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("poisson", help="Poisson central moments and main terms")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--kmax", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("pb", help="Poisson-binomial moments")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--primes-x", type=int, default=None,
                       help="use the stream p=(1/p) over primes <= this bound")
    group.add_argument("--p-file", default=None,
                       help="file with one probability per line")
    p.add_argument("--kmax", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("omega", help="sieved omega moments under a centering")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--center", default="loglogx",
                   help="loglogx | loglogx_plus_a | mertens | custom=C")
    p.add_argument("--block", type=int, default=primes.DEFAULT_BLOCK)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("saddle", help="saddle-point solution for (k, lambda)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--ratio", default=None, help="set k/lambda directly")
    _add_common(p)

    p = sub.add_parser("delange", help="main-term coefficient k! A_{k,T}(x)")
    p.add_argument("--x", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", default="0")
    p.add_argument("--order", type=int, default=None, help="series order K >= k (default k+4)")
    _add_common(p)

    p = sub.add_parser("transition", help="moment ratios to M_k across k")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--kmax", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("verify", help="run acceptance grids")
    p.add_argument("--suite", required=True, choices=sorted(suites.SUITES))
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)

    return parser


def _emit(rep: report.MomentReport, args) -> None:
    text = rep.to_csv() if args.format == "csv" else rep.to_json()
    if args.out:
        rep.write(args.out, args.format)
    else:
        sys.stdout.write(text)


def _cache_dir(args):
    return args.cache or os.environ.get("EKMOMENTS_CACHE") or None


def _parse_number(text):
    """int when integral (keeps downstream arithmetic exact), else mpf."""
    try:
        return int(text)
    except ValueError:
        return mpf(text)


def _cmd_sieve(args) -> int:
    hist = primes.get_or_build_histogram(args.x, _cache_dir(args), block=args.block, n_jobs=args.jobs)
    if _cache_dir(args) is None:
        sys.stderr.write("note: no cache directory configured; histogram not persisted\n")
    print(f"x={hist.x} total={hist.total()} max_omega={hist.max_m()}")
    return EXIT_OK


def _cmd_poisson(args) -> int:
    lam_in = _parse_number(args.lam)
    lam = mpf(lam_in)
    central = exactmoments.poisson_central_moments(lam_in, args.kmax)
    rows = []
    for k in range(args.kmax + 1):
        exact = central[k] / lam ** (mpf(k) / 2)
        main = err = None
        flags = ()
        fid = ""
        if 1 <= k <= asymptotics.RANGE_A * lam ** (mpf(1) / 3):
            v = asymptotics.poisson_lowk_main(k, lam)
            main, err, flags, fid = v.main, v.predicted_relative_error, v.flags, v.formula_id
        elif k >= 1:
            v = asymptotics.poisson_saddle_main(k, lam)
            main, err, flags, fid = v.main, v.predicted_relative_error, v.flags, v.formula_id
        rows.append(report.make_row(fid, f"poisson({args.lam})", lam, k, "lambda",
                                    exact=exact, asymptotic=main, predicted_error=err, flags=flags))
    _emit(report.MomentReport(rows), args)
    return EXIT_OK


def _read_probabilities(path: str) -> list:
    ps = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                ps.append(mpf(line))
    return ps


def _cmd_pb(args) -> int:
    if args.primes_x is not None:
        x = args.primes_x

        def stream():
            for block in primes.iter_prime_blocks(x):
                for p in block.tolist():
                    yield mpf(1) / p

        label = f"pb(1/p, p<={x})"
        ps_factory = stream
        central = exactmoments.poisson_binomial_central_moments(stream(), args.kmax)
    else:
        ps = _read_probabilities(args.p_file)
        label = f"pb(file:{os.path.basename(args.p_file)})"
        ps_factory = ps
        central = exactmoments.poisson_binomial_central_moments(ps, args.kmax)
    lam, Lam = asymptotics._pb_lambda_Lambda(ps_factory)
    rows = []
    for k in range(args.kmax + 1):
        exact = central[k] / lam ** (mpf(k) / 2)
        main = err = None
        flags = ()
        fid = ""
        if 1 <= k <= asymptotics.RANGE_A * lam ** (mpf(1) / 3) and (Lam == 0 or k <= asymptotics.RANGE_A * lam / Lam):
            v = asymptotics.pb_lowk_main(ps_factory, k, lam=lam, Lam=Lam)
            main, err, flags, fid = v.main, v.predicted_relative_error, v.flags, v.formula_id
        elif 1 <= k <= asymptotics.RANGE_A * lam:
            v = asymptotics.pb_saddle_main(ps_factory, k)
            main, err, flags, fid = v.main, v.predicted_relative_error, v.flags, v.formula_id
        rows.append(report.make_row(fid, label, lam, k, "lambda",
                                    exact=exact, asymptotic=main, predicted_error=err, flags=flags))
    _emit(report.MomentReport(rows), args)
    return EXIT_OK


def _parse_center(text: str) -> CenteringSpec:
    if text.startswith("custom="):
        return CenteringSpec("custom", custom=mpf(text[len("custom="):]))
    alias = {"mertens": "mertens_sum"}
    mode = alias.get(text, text)
    if mode not in exactmoments.CENTERING_MODES:
        raise DomainError(f"unknown centering {text!r}")
    return CenteringSpec(mode)


def _cmd_omega(args) -> int:
    spec = _parse_center(args.center)
    hist = primes.get_or_build_histogram(args.x, _cache_dir(args), block=args.block, n_jobs=args.jobs)
    lam = mpmath.log(mpmath.log(mpf(args.x)))
    c = spec.resolve(x=args.x, lam=lam)
    T = c - lam
    rows = []
    for k in range(args.kmax + 1):
        exact = exactmoments.omega_central_moment(hist, c, k)
        main = err = None
        flags = ()
        fid = ""
        if 1 <= k and abs(T) <= asymptotics.RANGE_A:
            if k <= asymptotics.RANGE_A * lam ** (mpf(1) / 3):
                v = asymptotics.omega_lowk_main(k, T, loglog_x=lam)
            elif k <= asymptotics.RANGE_A * lam:
                v = asymptotics.omega_saddle_main(k, T, loglog_x=lam)
            else:
                v = None
            if v is not None:
                # the main terms predict the normalized moment; rows carry raw ones
                main = v.main * lam ** (mpf(k) / 2)
                err, flags, fid = v.predicted_relative_error, v.flags, v.formula_id
        rows.append(report.make_row(fid, "omega", args.x, k, args.center,
                                    exact=exact, asymptotic=main, predicted_error=err, flags=flags))
    _emit(report.MomentReport(rows), args)
    return EXIT_OK


def _cmd_saddle(args) -> int:
    if (args.lam is None) == (args.ratio is None):
        raise DomainError("pass exactly one of --lambda, --ratio")
    if args.ratio is not None:
        lam = mpf(args.k) / mpf(args.ratio)
    else:
        lam = mpf(args.lam)
    sol = asymptotics.solve_saddle(args.k, lam)
    rows = [report.make_row("P3", "saddle", lam, args.k, "lambda", exact=sol.r, asymptotic=None,
                            predicted_error=None)]
    rep = report.MomentReport(rows)
    _emit(rep, args)
    for name in ("r", "b", "t", "S1", "S2", "S", "s"):
        print(f"{name} = {mpmath.nstr(getattr(sol, name), mp.dps)}", file=sys.stderr)
    return EXIT_OK


def _cmd_delange(args) -> int:
    K = args.order if args.order is not None else args.k + 4
    res = series.delange_coefficient(mpf(args.x), mpf(args.T), args.k, K=K)
    lam = mpmath.log(mpmath.log(mpf(args.x)))
    rows = [report.make_row("T1a", "omega-main-term", args.x, args.k,
                            f"loglogx+T,T={args.T}",
                            exact=res.value, asymptotic=None, predicted_error=res.est_error)]
    _emit(report.MomentReport(rows), args)
    print(f"normalized: {mpmath.nstr(res.value / lam ** (mpf(args.k) / 2), 20)}", file=sys.stderr)
    return EXIT_OK


def _cmd_transition(args) -> int:
    rows = asymptotics.theorem_ratios("T3", lam=_parse_number(args.lam),
                                      k_values=list(range(2, args.kmax + 1)))
    _emit(report.MomentReport(rows), args)
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = suites.run_suite(args.suite, cache_dir=_cache_dir(args), jobs=args.jobs)
    failures = 0
    for res in results:
        print(res.summary())
        for line in res.lines:
            print(line)
        failures += 0 if res.passed else 1
    print(f"suite {args.suite}: {len(results) - failures}/{len(results)} criteria passed, {failures} failed")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


_COMMANDS = {
    "sieve": _cmd_sieve,
    "poisson": _cmd_poisson,
    "pb": _cmd_pb,
    "omega": _cmd_omega,
    "saddle": _cmd_saddle,
    "delange": _cmd_delange,
    "transition": _cmd_transition,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision is not None:
        set_working_dps(args.precision)
    try:
        return _COMMANDS[args.command](args)
    except (RangeGuardError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
