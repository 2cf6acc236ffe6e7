"""Glue between smoothing, selection and clustering used by the CLI."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import eval_basis, make_knots
from .cluster import CoefficientMatrix, kmeans
from .errors import DegenerateRoughnessError, PSKMeansError, SingularSystemError
from .metrics import adjusted_rand_index
from .select import DEFAULT_ACTIVE_SHRINK, default_lambda_grid, vcurve_trace
from .simgen import SimConfig, generate_dataset
from .smooth import Series, SplineFit, difference_matrix, fit_pspline

log = logging.getLogger(__name__)

MODES = ("vcurve", "regression", "fixed")
THREADS_ENV = "PSKMEANS_THREADS"
FALLBACK_STATUSES = ("fallback_max_lambda", "regression_min_norm")


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class SmoothResult:
    series_ids: list
    fits: dict = field(default_factory=dict)
    status: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    @property
    def ok_ids(self) -> list:
        return [s for s in self.series_ids if s in self.fits]

    @property
    def fallbacks(self) -> list:
        return [s for s in self.ok_ids if self.status[s] in FALLBACK_STATUSES]

    def coefficient_matrix(self) -> CoefficientMatrix:
        ids = self.ok_ids
        return CoefficientMatrix(np.column_stack([self.fits[s].coefficients for s in ids]), ids)

    def lambdas(self) -> dict:
        return {s: self.fits[s].lam for s in self.ok_ids}


def _min_norm_fit(series, grid, order, basis) -> SplineFit:
    keep = ~series.mask
    b = basis[keep]
    a = np.linalg.lstsq(b, series.y[keep], rcond=None)[0]
    resid = series.y[keep] - b @ a
    da = difference_matrix(grid.n_basis, order).matrix @ a
    return SplineFit(a, 0.0, float(resid @ resid), float(da @ da), grid, order)


def smooth_one(series: Series, grid, order: int, mode: str, lambda_grid, basis,
               fixed_lambda: float | None = None, active_shrink: float = DEFAULT_ACTIVE_SHRINK,
               keep_trace: bool = False):
    """Fit one series; returns ``(fit, status, trace)``.

    Status is ``selected`` (V-curve), ``fallback_max_lambda`` (zero roughness,
    refit at the largest grid lambda), ``fixed``, ``regression`` or
    ``regression_min_norm`` (unidentifiable regression spline, minimum-norm
    least squares).
    """
    if mode == "regression":
        try:
            return fit_pspline(series, grid, 0.0, order, basis=basis), "regression", None
        except SingularSystemError:
            return _min_norm_fit(series, grid, order, basis), "regression_min_norm", None
    if mode == "fixed":
        return fit_pspline(series, grid, fixed_lambda, order, basis=basis), "fixed", None
    try:
        trace = vcurve_trace(series, grid, order, lambda_grid, basis, active_shrink)
    except DegenerateRoughnessError as exc:
        lam = float(np.max(lambda_grid))
        log.info("series %s: %s; falling back to lambda=%g", series.series_id, exc, lam)
        return fit_pspline(series, grid, lam, order, basis=basis), "fallback_max_lambda", None
    fit = fit_pspline(series, grid, trace.lambda_star, order, basis=basis)
    return fit, "selected", trace if keep_trace else None


def smooth_table(x, Y, mask, series_ids, n_segments: int = 25, degree: int = 3, order: int = 3,
                 mode: str = "vcurve", lambda_grid=None, fixed_lambda: float | None = None,
                 active_shrink: float = DEFAULT_ACTIVE_SHRINK, threads: int = 1,
                 keep_traces: bool = False) -> SmoothResult:
    """Fit every column of ``Y`` on a shared knot grid spanning ``x``.

    Per-series errors are recorded in ``failures`` and do not stop the run.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "fixed" and (fixed_lambda is None or fixed_lambda < 0):
        raise ValueError("fixed mode needs a lambda >= 0")
    x = np.asarray(x, dtype=np.float64)
    lambda_grid = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    grid = make_knots(x[0], x[-1], n_segments, degree)
    basis = eval_basis(grid, x).values
    ids = list(series_ids)
    result = SmoothResult(ids)

    def work(i):
        sid = ids[i]
        try:
            series = Series(x, Y[:, i], mask[:, i], sid)
            return sid, smooth_one(series, grid, order, mode, lambda_grid, basis, fixed_lambda,
                                   active_shrink, keep_traces), None
        except PSKMeansError as exc:
            return sid, None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(work, range(len(ids))))
    else:
        outcomes = [work(i) for i in range(len(ids))]
    for sid, out, err in outcomes:
        if err is not None:
            log.warning("series %s failed: %s", sid, err)
            result.failures[sid] = err
            continue
        fit, status, trace = out
        result.fits[sid] = fit
        result.status[sid] = status
        if trace is not None:
            result.traces[sid] = trace
    return result


def replicate_seeds(seed: int, replicates: int) -> list[tuple[int, int]]:
    """``(data_seed, cluster_seed)`` per replicate, split from one master seed."""
    children = np.random.SeedSequence(seed).spawn(replicates)
    return [tuple(int(v) for v in c.generate_state(2, dtype=np.uint32)) for c in children]


def run_replicate(scenario: str, data_seed: int, cluster_seed: int, *, missing=None,
                  knot_pct: float = 10.0, degree: int = 3, order: int = 3,
                  mode: str = "vcurve", k: int = 6, distance: str = "pearson",
                  restarts: int = 50, lambda_grid=None, n_points: int = 100,
                  class_sizes=None, active_shrink: float = DEFAULT_ACTIVE_SHRINK,
                  init: str = "forgy") -> dict:
    """Generate, smooth, cluster and score one simulated dataset."""
    t0 = time.perf_counter()
    kwargs = {} if class_sizes is None else {"class_sizes": tuple(class_sizes)}
    config = SimConfig(n_points=n_points, scenario=scenario, missing=missing, seed=data_seed, **kwargs)
    ds = generate_dataset(config)
    n_segments = knot_count(knot_pct, n_points)
    sm = smooth_table(ds.x, ds.Y, ds.mask, ds.series_ids, n_segments, degree, order, mode,
                      lambda_grid, active_shrink=active_shrink)
    ok = [i for i, s in enumerate(ds.series_ids) if s in sm.fits]
    part = kmeans(sm.coefficient_matrix(), k, distance, restarts, seed=cluster_seed, init=init)
    ari = adjusted_rand_index(part.labels, ds.true_labels[ok])
    return {
        "scenario": scenario,
        "missing": missing is not None,
        "mode": mode,
        "knot_pct": knot_pct,
        "n_segments": n_segments,
        "data_seed": data_seed,
        "cluster_seed": cluster_seed,
        "ari": ari,
        "objective": part.objective,
        "n_failed": len(sm.failures),
        "n_fallback": len(sm.fallbacks),
        "seconds": time.perf_counter() - t0,
    }


def knot_count(knot_pct: float, n_points: int) -> int:
    """Number of segments as a percentage of the observation count (at least 1)."""
    if knot_pct <= 0:
        raise ValueError(f"knot percentage must be > 0, got {knot_pct}")
    return max(1, int(round(knot_pct / 100.0 * n_points)))


def run_replicates(scenario: str, replicates: int, seed: int, threads: int = 1, **kwargs) -> list[dict]:
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    seeds = replicate_seeds(seed, replicates)

    def one(i):
        row = run_replicate(scenario, *seeds[i], **kwargs)
        row["replicate"] = i
        return row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(replicates)))
    return [one(i) for i in range(replicates)]


def summarize(rows: list[dict]) -> dict:
    ari = np.array([r["ari"] for r in rows])
    return {
        "n": int(ari.size),
        "mean_ari": float(ari.mean()),
        "sd_ari": float(ari.std(ddof=1)) if ari.size > 1 else 0.0,
        "min_ari": float(ari.min()),
        "max_ari": float(ari.max()),
        "mean_seconds": float(np.mean([r["seconds"] for r in rows])),
    }
