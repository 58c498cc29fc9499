"""Command-line interface: eval, table, test, mc-verify, laplace-verify.

Results go to stdout as JSON (sorted keys) or CSV; diagnostics go to stderr.
Exit status is 2 for usage errors, 1 when a verification row fails or a
requested accuracy cannot be met, 0 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import distributions as dist
from . import gof, laplace, mc
from ._series import Accuracy, AccuracyError, DomainError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

MC_ALLOWANCE = 0.01
FIT_ALPHA = 0.001


class UsageError(Exception):
    pass


def _floats(text: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"not a number list: {text!r}") from None


def _grid(text: str) -> List[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    return _arange(start, stop, step)


def _arange(start: float, stop: float, step: float) -> List[float]:
    if not step > 0 or stop < start:
        raise UsageError("need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(count + 1)]


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


# -- eval / table ---------------------------------------------------------------

def cmd_eval(args) -> int:
    acc = Accuracy(args.tol, args.max_terms)
    point = tuple(_floats(args.at))
    r = dist.evaluate(args.dist, point, acc)
    _dump({"args": list(point), "dist": args.dist, "trunc_bound": r.bound, "value": r.value})
    return EXIT_OK


def cmd_table(args) -> int:
    acc = Accuracy(args.tol, args.max_terms)
    if (args.dist == "joint") != (args.y is not None):
        raise UsageError("--y is required for --dist joint and only allowed there")
    xs = _arange(args.start, args.stop, args.step)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["x", "value"])
        for x in xs:
            point = (x, args.y) if args.dist == "joint" else (x,)
            w.writerow([repr(x), repr(dist.evaluate(args.dist, point, acc).value)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- test ---------------------------------------------------------------------------

def parse_null(text: str):
    name, _, params = text.partition(":")
    vals = _floats(params) if params else []
    try:
        if name == "uniform" and not vals:
            return gof.uniform_cdf
        if name == "arcsine" and not vals:
            return gof.arcsine_cdf
        if name == "normal" and len(vals) == 2:
            return gof.normal_cdf(*vals)
        if name == "exp" and len(vals) == 1:
            return gof.exponential_cdf(vals[0])
        if name == "gamma-half" and len(vals) == 1:
            return gof.gamma_half_cdf(vals[0])
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"bad --null {text!r}; expected uniform | arcsine | normal:mu,sigma | exp:rate | gamma-half:theta")


def read_values(path: str) -> np.ndarray:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise UsageError(f"{path}: no data")
    return np.array(values)


TESTS = {"ks": gof.ks_test, "ks-plus": gof.ks_plus_test, "kuiper": gof.kuiper_test}


def cmd_test(args) -> int:
    null = parse_null(args.null)
    sample = gof.Sample.of(read_values(args.file))
    report = TESTS[args.test](sample, null, min_n=args.min_n)
    if report.small_sample:
        print(f"warning: n={report.n} < {args.min_n}; asymptotic p-value is approximate", file=sys.stderr)
    _dump(report.as_dict())
    return EXIT_OK


# -- mc-verify -----------------------------------------------------------------------

EXTREMA_CHECKS = [
    # (check name, functional, params, closed form)
    ("max_cdf(1.0)", "max_cdf", (1.0,), lambda: dist.ks_cdf(1.0)),
    ("kuiper_cdf(1.0)", "kuiper_cdf", (1.0,), lambda: dist.kuiper_cdf(1.0)),
    ("diff_tail(0.5)", "diff_tail", (0.5,), lambda: dist.diff_tail(0.5)),
    ("quotient_cdf(2.0)", "quotient_cdf", (2.0,), lambda: dist.quotient_cdf(2.0)),
    ("product_moment", "product_moment", (), lambda: dist.extrema_moments().e_product),
    ("onesided_tail(1.0)", "onesided_tail", (1.0,), lambda: dist.one_sided_tail(1.0)),
    ("min_tail(0.5)", "min_tail", (0.5,), lambda: dist.min_extremum_tail(0.5)),
    ("joint_cdf(0.5,1.0)", "joint_cdf", (0.5, 1.0), lambda: dist.joint_cdf(0.5, 1.0)),
]


def extrema_rows(n_paths: int, n_steps: int, seed: int, workers: Optional[int]) -> list:
    m_plus, m_minus = mc.simulate_extrema(n_paths, n_steps, seed, refine=True, workers=workers)
    rows = []
    for name, functional, params, closed in EXTREMA_CHECKS:
        est = mc.summarize(mc.functional_values(functional, params, m_plus, m_minus))
        cf = closed()
        rows.append({
            "check": name,
            "closed_form": cf,
            "mc_mean": est.mean,
            "stderr": est.stderr,
            "p_value": None,
            "pass": abs(est.mean - cf) <= 3.0 * est.stderr + MC_ALLOWANCE,
        })
    return rows


def _fit_row(check: str, samples: np.ndarray, cdf, mean: float) -> dict:
    est = mc.summarize(samples)
    p = gof.ks_test(gof.Sample.of(samples), cdf).p_value
    return {
        "check": check,
        "closed_form": mean,
        "mc_mean": est.mean,
        "stderr": est.stderr,
        "p_value": p,
        "pass": p > FIT_ALPHA,
    }


def excursion_rows(n_samples: int, n_steps: int, seed: int, workers: Optional[int]) -> list:
    rows = [_fit_row("last_zero_arcsine", mc.last_zero_samples(n_samples, n_steps, seed),
                     gof.arcsine_cdf, 0.5)]
    for theta in (0.5, 2.0):
        tp = laplace.ThetaParam(theta)
        g = mc.killed_last_zero_samples(tp, n_samples, n_steps, seed)
        rows.append(_fit_row(f"killed_last_zero_gamma_half(theta={theta})", g,
                             gof.gamma_half_cdf(theta), 1.0 / (2.0 * theta)))
    tp = laplace.ThetaParam(0.5)
    pairs = mc.killed_pair_samples(tp, n_samples, n_steps, seed)
    rows.append(_fit_row("killed_pair_sum(theta=0.5)", pairs.sum(axis=1),
                         lambda x: laplace.rescaled_law("sum_cdf", x, tp=tp), 1.0 / tp.c))
    vmax = mc.vervaat_max_samples(n_samples, n_steps, seed, workers=workers)
    rows.append(_fit_row("vervaat_max_kuiper", vmax, dist.kuiper_cdf, 2.0 * dist.extrema_moments().mean_mplus))
    return rows


def cmd_mc_verify(args) -> int:
    if args.paths < 2:
        raise UsageError("--paths must be >= 2")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    rows = []
    if args.suite in ("extrema", "all"):
        rows += extrema_rows(args.paths, args.steps, args.seed, args.workers)
    if args.suite in ("excursion", "all"):
        rows += excursion_rows(args.samples, args.excursion_steps, args.seed, args.workers)
    _dump(rows)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def cmd_laplace_verify(args) -> int:
    tp = laplace.ThetaParam(args.theta)
    grid = _grid(args.grid)
    if any(x <= 0 for x in grid):
        raise UsageError("grid points must be > 0")
    rows = laplace.verify_grid(tp, grid, tol=args.tol)
    _dump(rows)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bridge-extrema", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def acc_flags(sp):
        sp.add_argument("--tol", type=float, default=1e-12, help="absolute truncation tolerance")
        sp.add_argument("--max-terms", type=int, default=200)

    e = sub.add_parser("eval", help="evaluate one law at one point")
    e.add_argument("--dist", required=True, choices=sorted(dist.ARITY))
    e.add_argument("--at", required=True, help="x or x,y (joint)")
    acc_flags(e)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("table", help="tabulate a law on a grid as CSV")
    t.add_argument("--dist", required=True, choices=sorted(dist.ARITY))
    t.add_argument("--from", dest="start", type=float, required=True)
    t.add_argument("--to", dest="stop", type=float, required=True)
    t.add_argument("--step", type=float, required=True)
    t.add_argument("--y", type=float, help="fixed second argument for --dist joint")
    t.add_argument("--out")
    acc_flags(t)
    t.set_defaults(func=cmd_table)

    g = sub.add_parser("test", help="goodness-of-fit test of a data file")
    g.add_argument("--file", required=True)
    g.add_argument("--test", required=True, choices=sorted(TESTS))
    g.add_argument("--null", required=True)
    g.add_argument("--min-n", type=int, default=gof.SMALL_SAMPLE_N)
    g.set_defaults(func=cmd_test)

    m = sub.add_parser("mc-verify", help="Monte Carlo check of the closed forms")
    m.add_argument("--paths", type=int, default=200_000)
    m.add_argument("--steps", type=int, default=2048)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--suite", choices=["extrema", "excursion", "all"], default="all")
    m.add_argument("--samples", type=int, default=50_000, help="samples per excursion check")
    m.add_argument("--excursion-steps", type=int, default=512, help="grid steps per unit time for excursion checks")
    m.add_argument("--workers", type=int, help=f"threads (default: ${mc.THREADS_ENV} or CPU count)")
    m.set_defaults(func=cmd_mc_verify)

    lv = sub.add_parser("laplace-verify", help="gamma-mixture residuals of the rescaled laws")
    lv.add_argument("--theta", type=float, required=True)
    lv.add_argument("--grid", default="0.2:3:0.2", help="start:stop:step")
    lv.add_argument("--tol", type=float, default=1e-6)
    lv.set_defaults(func=cmd_laplace_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError, OSError) as exc:
        print(f"bridge-extrema: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, laplace.QuadratureError) as exc:
        print(f"bridge-extrema: accuracy failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
