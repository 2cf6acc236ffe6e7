"""Command-line entry point: ``pskmeans <subcommand> ...``.

Subcommands: simulate, smooth, vcurve, cluster, evaluate, replicate.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .basis import eval_basis, make_knots
from .cluster import DISTANCES, INITS, MAX_ITER, CoefficientMatrix, kmeans
from .errors import PSKMeansError
from .metrics import adjusted_rand_index
from .pipeline import (MODES, default_threads, knot_count, replicate_seeds, run_replicate,
                       smooth_table, summarize)
from .select import (DEFAULT_ACTIVE_SHRINK, DEFAULT_LAMBDA_COUNT, DEFAULT_LAMBDA_MAX,
                     DEFAULT_LAMBDA_MIN, default_lambda_grid, vcurve_trace)
from .simgen import CLASS_NAMES, DEFAULT_CLASS_SIZES, SCENARIOS, SimConfig, generate_dataset
from .smooth import Series

log = logging.getLogger("pskmeans")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _add_basis_args(p, segments=25):
    g = p.add_argument_group("smoother")
    g.add_argument("--segments", type=_positive_int, default=segments,
                   help="number of equal knot intervals (default %(default)s)")
    g.add_argument("--degree", type=_nonneg_int, default=3, help="B-spline degree (default 3)")
    g.add_argument("--order", type=_positive_int, default=3, help="difference penalty order (default 3)")
    g.add_argument("--lambda-min", type=_positive_float, default=DEFAULT_LAMBDA_MIN)
    g.add_argument("--lambda-max", type=_positive_float, default=DEFAULT_LAMBDA_MAX)
    g.add_argument("--lambda-count", type=int, default=DEFAULT_LAMBDA_COUNT)
    g.add_argument("--active-shrink", type=float, default=DEFAULT_ACTIVE_SHRINK,
                   help="V-curve search starts where the roughest mode is shrunk by 1 + this "
                        "(0 searches the whole grid)")


def _add_smooth_mode_args(p):
    p.add_argument("--mode", choices=MODES, default="vcurve",
                   help="vcurve: select lambda per series; regression: lambda = 0; fixed: use --lambda")
    p.add_argument("--lambda", dest="fixed_lambda", type=float, default=None)


def _add_cluster_args(p, k=None, distance="sq_euclid"):
    g = p.add_argument_group("k-means")
    g.add_argument("-k", "--clusters", dest="k", type=int, default=k, required=k is None)
    g.add_argument("--distance", choices=DISTANCES, default=distance)
    g.add_argument("--restarts", type=_positive_int, default=50)
    g.add_argument("--max-iter", type=_positive_int, default=MAX_ITER)
    g.add_argument("--init", choices=INITS, default="forgy")


def _lambda_grid(args):
    return default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)


def _check_basis_args(args):
    if args.order >= args.segments + args.degree:
        raise PSKMeansError(f"penalty order {args.order} needs more than "
                            f"{args.segments + args.degree} coefficients")
    if args.mode == "fixed" and args.fixed_lambda is None:
        raise PSKMeansError("--mode fixed requires --lambda")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    missing = None if args.no_missing else (args.min_missing, args.max_missing)
    config = SimConfig(n_points=args.n_points, class_sizes=tuple(args.class_sizes),
                       scenario=args.scenario, missing=missing, seed=args.seed,
                       per_series_scales=args.per_series_scales)
    ds = generate_dataset(config)
    out = _outdir(args.out)
    ids = ds.series_ids
    io.write_series_csv(out / "series.csv", ds.x, ds.Y, ds.mask, ids)
    with open(out / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", "class", "class_name"])
        for sid, c in zip(ids, ds.true_labels):
            w.writerow([sid, int(c), CLASS_NAMES[c]])
    io.write_json(out / "provenance.json", {
        "config": config.to_dict(),
        "sigma_alpha": ds.sigma_alpha if config.per_series_scales else float(ds.sigma_alpha[0]),
        "sigma_beta": ds.sigma_beta if config.per_series_scales else float(ds.sigma_beta[0]),
        "draws": {sid: {"class": int(c), "alpha": float(a), "beta": float(b), "noise_sd": float(s),
                        "missing_fraction": float(f)}
                  for sid, c, a, b, s, f in zip(ids, ds.true_labels, ds.alphas, ds.betas,
                                                ds.noise_sds, ds.missing_fractions())},
    })
    print(f"wrote {ds.n_series} series x {ds.x.size} points to {out}")
    return 0


# -- smooth -----------------------------------------------------------------

def _smooth(args, table):
    _check_basis_args(args)
    return smooth_table(table.x, table.Y, table.mask, table.series_ids, args.segments, args.degree,
                        args.order, args.mode, _lambda_grid(args), args.fixed_lambda,
                        args.active_shrink, args.threads)


def _write_smooth_outputs(out: Path, result, args) -> dict:
    cm = result.coefficient_matrix() if result.fits else None
    paths = {}
    if cm is not None:
        paths["coefficients"] = io.write_coefficients_csv(out / "coefficients.csv", cm.values, cm.series_ids)
    with open(out / "lambdas.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", "lambda", "status"])
        for sid in result.series_ids:
            if sid in result.fits:
                w.writerow([sid, io.format_real(result.fits[sid].lam), result.status[sid]])
            else:
                w.writerow([sid, io.NA, "failed"])
    paths["lambdas"] = out / "lambdas.csv"
    meta = {
        "segments": args.segments, "degree": args.degree, "order": args.order, "mode": args.mode,
        "lambda_grid": {"min": args.lambda_min, "max": args.lambda_max, "count": args.lambda_count},
        "active_shrink": args.active_shrink,
        "n_series": len(result.series_ids), "n_fitted": len(result.fits),
        "fallbacks": result.fallbacks, "failures": result.failures,
    }
    paths["metadata"] = io.write_json(out / "smooth.json", meta)
    return paths


def cmd_smooth(args) -> int:
    table = io.read_series_csv(args.input)
    result = _smooth(args, table)
    out = _outdir(args.out)
    _write_smooth_outputs(out, result, args)
    n_basis = args.segments + args.degree
    print(f"smoothed {len(result.fits)}/{len(result.series_ids)} series; "
          f"{n_basis} coefficients each; {len(result.fallbacks)} fallback(s); "
          f"{len(result.failures)} failure(s)")
    for sid, err in result.failures.items():
        print(f"  failed {sid}: {err}", file=sys.stderr)
    return 1 if result.failures else 0


# -- vcurve -----------------------------------------------------------------

def cmd_vcurve(args) -> int:
    table = io.read_series_csv(args.input)
    if args.series not in table.series_ids:
        raise PSKMeansError(f"no series {args.series!r} in {args.input}")
    j = table.series_ids.index(args.series)
    grid = make_knots(table.x[0], table.x[-1], args.segments, args.degree)
    series = Series(table.x, table.Y[:, j], table.mask[:, j], args.series)
    trace = vcurve_trace(series, grid, args.order, _lambda_grid(args),
                         eval_basis(grid, table.x).values, args.active_shrink)
    rows = [["lambda", "psi", "phi", "v"]]
    for i, lam in enumerate(trace.lambdas):
        v = io.format_real(trace.v[i]) if i < trace.v.size else io.NA
        rows.append([io.format_real(lam), io.format_real(trace.psi[i]), io.format_real(trace.phi[i]), v])
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    print(f"lambda_star={trace.lambda_star:.6e} (interval {trace.argmin_index}, "
          f"search from {trace.active_from})", file=sys.stderr)
    return 0


# -- cluster ----------------------------------------------------------------

def _read_header(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.readline().split(",")[0].strip()


def cmd_cluster(args) -> int:
    out = _outdir(args.out)
    first = _read_header(args.input)
    failures = {}
    extra = {"input": str(args.input), "init": args.init, "max_iter": args.max_iter}
    t0 = time.perf_counter()
    if first == "time":
        table = io.read_series_csv(args.input)
        result = _smooth(args, table)
        _write_smooth_outputs(out, result, args)
        cm = result.coefficient_matrix()
        lambdas = result.lambdas()
        failures = result.failures
        extra.update({"segments": args.segments, "degree": args.degree, "order": args.order,
                      "mode": args.mode, "fallbacks": result.fallbacks, "failures": failures})
    else:
        values, ids = io.read_matrix_csv(args.input)
        cm = CoefficientMatrix(values, ids)
        lambdas = None
    part = kmeans(cm, args.k, args.distance, args.restarts, args.max_iter, args.seed, args.init)
    extra["seconds"] = time.perf_counter() - t0
    io.write_results(out, part, cm, lambdas=lambdas, extra_metadata=extra)
    sizes = np.bincount(part.labels, minlength=part.k)
    print(f"K={part.k} distance={part.distance} J={part.objective:.6e} cluster sizes={sizes.tolist()}")
    if args.truth:
        ids, truth = io.read_labels_csv(args.truth, args.truth_column)
        lookup = dict(zip(ids, truth))
        missing = [s for s in cm.series_ids if s not in lookup]
        if missing:
            raise PSKMeansError(f"{len(missing)} series have no truth label, e.g. {missing[0]}")
        ari = adjusted_rand_index(part.labels, [lookup[s] for s in cm.series_ids])
        print(f"ARI={ari:.6f}")
    return 1 if failures else 0


# -- evaluate ---------------------------------------------------------------

def cmd_evaluate(args) -> int:
    ids_a, a = io.read_labels_csv(args.labels_a, args.column_a)
    if args.labels_b is None:
        if args.column_b is None:
            raise PSKMeansError("with a single file, give --column-b")
        ids_b, b = io.read_labels_csv(args.labels_a, args.column_b)
    else:
        ids_b, b = io.read_labels_csv(args.labels_b, args.column_b)
    if ids_a != ids_b and sorted(ids_a) == sorted(ids_b) and len(set(ids_a)) == len(ids_a):
        pos = {sid: i for i, sid in enumerate(ids_b)}
        b = b[[pos[s] for s in ids_a]]
    print(f"{adjusted_rand_index(a, b):.6f}")
    return 0


# -- replicate --------------------------------------------------------------

_REPLICATE_FIELDS = ["scenario", "missing", "mode", "knot_pct", "n_segments", "replicate",
                     "data_seed", "cluster_seed", "ari", "objective", "n_failed", "n_fallback", "seconds"]


def cmd_replicate(args) -> int:
    if args.replicates < 1:
        raise PSKMeansError(f"replicates must be >= 1, got {args.replicates}")
    scenarios = sorted(SCENARIOS) if args.scenario == ["all"] else args.scenario
    modes = ["vcurve", "regression"] if args.mode == "both" else [args.mode]
    missing = (args.min_missing, args.max_missing) if args.missing else None
    for pct in args.knot_pct:
        knot_count(pct, args.n_points)
    out = _outdir(args.out)
    seeds = replicate_seeds(args.seed, args.replicates)
    grid = _lambda_grid(args)
    rows = []
    # one collector writes rows as they finish so partial runs stay readable
    with open(out / "replicates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=_REPLICATE_FIELDS, lineterminator="\n")
        w.writeheader()
        jobs = [(sc, pct, mode, i) for sc in scenarios for pct in args.knot_pct
                for mode in modes for i in range(args.replicates)]

        def run(job):
            sc, pct, mode, i = job
            row = run_replicate(sc, *seeds[i], missing=missing, knot_pct=pct, degree=args.degree,
                                order=args.order, mode=mode, k=args.k, distance=args.distance,
                                restarts=args.restarts, lambda_grid=grid, n_points=args.n_points,
                                active_shrink=args.active_shrink, init=args.init)
            row["replicate"] = i
            return row

        if args.threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(args.threads) as pool:
                results = pool.map(run, jobs)
                for row in results:
                    rows.append(row)
                    w.writerow({k: row[k] for k in _REPLICATE_FIELDS})
                    fh.flush()
        else:
            for job in jobs:
                row = run(job)
                rows.append(row)
                w.writerow({k: row[k] for k in _REPLICATE_FIELDS})
                fh.flush()
                log.info("%s %s pct=%s rep=%d ARI=%.4f", *job, row["ari"])

    summary = []
    for sc in scenarios:
        for pct in args.knot_pct:
            for mode in modes:
                sub = [r for r in rows if r["scenario"] == sc and r["knot_pct"] == pct and r["mode"] == mode]
                s = summarize(sub)
                summary.append({"scenario": sc, "knot_pct": pct, "mode": mode, "missing": missing is not None, **s})
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(summary)
    io.write_json(out / "replicate.json", {"seed": args.seed, "replicates": args.replicates,
                                           "missing": missing, "distance": args.distance,
                                           "restarts": args.restarts, "k": args.k,
                                           "init": args.init, "summary": summary})
    print(f"{'scenario':<8} {'knots%':>6} {'mode':<10} {'n':>3} {'mean ARI':>9} {'sd':>7}")
    for s in summary:
        print(f"{s['scenario']:<8} {s['knot_pct']:>6g} {s['mode']:<10} {s['n']:>3} "
              f"{s['mean_ari']:>9.4f} {s['sd_ari']:>7.4f}")
    failed = sum(r["n_failed"] for r in rows)
    return 1 if failed else 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pskmeans", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--threads", type=_positive_int, default=default_threads(),
                        help="worker threads (default from $PSKMEANS_THREADS, else 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a six-class synthetic dataset")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="iid")
    p.add_argument("--n-points", type=_positive_int, default=100)
    p.add_argument("--class-sizes", type=_positive_int, nargs=6, default=list(DEFAULT_CLASS_SIZES))
    p.add_argument("--no-missing", action="store_true", help="keep every observation")
    p.add_argument("--min-missing", type=float, default=0.10)
    p.add_argument("--max-missing", type=float, default=0.50)
    p.add_argument("--per-series-scales", action="store_true",
                   help="draw the alpha/beta spreads per series instead of once per dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("smooth", help="fit a P-spline to every series of a table")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    _add_basis_args(p)
    _add_smooth_mode_args(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("vcurve", help="emit the V-curve trace of one series as CSV")
    p.add_argument("input")
    p.add_argument("--series", required=True)
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_basis_args(p)
    p.set_defaults(func=cmd_vcurve)

    p = sub.add_parser("cluster", help="k-means on coefficients (smooths first for series tables)")
    p.add_argument("input", help="coefficients.csv, or a series table")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="label CSV to score the partition against")
    p.add_argument("--truth-column", default=None)
    _add_cluster_args(p)
    _add_basis_args(p)
    _add_smooth_mode_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="adjusted Rand index between two labelings")
    p.add_argument("labels_a")
    p.add_argument("labels_b", nargs="?")
    p.add_argument("--column-a", default=None)
    p.add_argument("--column-b", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("replicate", help="simulation study: generate, smooth, cluster, score")
    p.add_argument("--scenario", nargs="+", default=["all"],
                   choices=sorted(SCENARIOS) + ["all"])
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--knot-pct", type=_positive_float, nargs="+", default=[10.0],
                   help="knot intervals as %% of observations, e.g. 10 20 30 40")
    p.add_argument("--missing", action="store_true", help="drop 10-50%% of each series")
    p.add_argument("--min-missing", type=float, default=0.10)
    p.add_argument("--max-missing", type=float, default=0.50)
    p.add_argument("--mode", choices=["vcurve", "regression", "both"], default="vcurve",
                   help="regression is the lambda = 0 baseline")
    p.add_argument("--n-points", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_cluster_args(p, k=6, distance="pearson")
    p.add_argument("--degree", type=_nonneg_int, default=3)
    p.add_argument("--order", type=_positive_int, default=3)
    p.add_argument("--lambda-min", type=_positive_float, default=DEFAULT_LAMBDA_MIN)
    p.add_argument("--lambda-max", type=_positive_float, default=DEFAULT_LAMBDA_MAX)
    p.add_argument("--lambda-count", type=int, default=DEFAULT_LAMBDA_COUNT)
    p.add_argument("--active-shrink", type=float, default=DEFAULT_ACTIVE_SHRINK)
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PSKMeansError, ValueError, OSError) as exc:
        print(f"pskmeans {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
