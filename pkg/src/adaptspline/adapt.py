"""Adaptive choice of the spline weights via the residual region.

Starting from the least squares line, per-point weights grow until the
weighted spline fit is accepted by the multiscale residual test: at each
round every point lying in some violating interval has its weight
multiplied by q.  A companion run keeps all weights equal (the classic
one-parameter smoothing family); the final answer is the smoother of the
two accepted fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .multiscale import RegionReport, RegionSpec, dyadic_family, in_region, sigma_hat
from .splines import Sample, SplineFit, affine_fit, solve_weighted

__all__ = [
    "AdaptConfig",
    "TraceEntry",
    "FitReport",
    "fit",
    "fit_local",
    "fit_global",
]

_MAX_HALVINGS = 60


@dataclass(frozen=True)
class AdaptConfig:
    """Tuning knobs of the weight-adaptation loop.

    ``sigma=None`` estimates the noise scale from the data once, up front;
    a float fixes it.  ``init_tolerance`` controls how close (relative to
    the data spread, in sup norm) the initial equal-weight fit must be to
    the least squares line; the initial weight is found by halving from 1.
    """

    q: float = 2.0
    tau: float = 3.0
    alpha: float = 0.95
    max_iterations: int = 200
    init_tolerance: float = 1e-3
    sigma: float | None = None

    def __post_init__(self):
        if self.q <= 1.0:
            raise ValueError("q must exceed 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.init_tolerance <= 0.0:
            raise ValueError("init_tolerance must be positive")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError("sigma must be a nonnegative finite number")


@dataclass(frozen=True)
class TraceEntry:
    """Stats of one examined fit: the line stage, then one entry per refit."""

    max_abs_w: float
    violations: int
    lambda_min: float
    lambda_max: float
    roughness: float


@dataclass(frozen=True)
class FitReport:
    """Audit trail of one adaptation run.

    ``iterations`` counts weight bumps; the trace has one entry per
    examined fit starting with the least squares line (recorded with
    lambda 0).  ``final_weights`` is None when the line itself was
    accepted.  On truncation the final fit is the last one examined and
    ``passed`` is False.
    """

    final_fit: SplineFit
    final_weights: np.ndarray | None
    iterations: int
    trace: tuple[TraceEntry, ...]
    sigma_used: float
    threshold_used: float
    tau: float
    passed: bool
    truncated: bool
    chosen_branch: str
    roughness_local: float | None = None
    roughness_global: float | None = None
    truncated_local: bool | None = None
    truncated_global: bool | None = None

    @property
    def roughness(self) -> float:
        return self.final_fit.roughness


def _ls_line(sample: Sample) -> SplineFit:
    slope, intercept = np.polyfit(sample.t, sample.y, 1)
    return affine_fit(sample.t, float(intercept), float(slope))


def _entry(report: RegionReport, weights: np.ndarray | None, rough: float) -> TraceEntry:
    lmin = float(weights.min()) if weights is not None else 0.0
    lmax = float(weights.max()) if weights is not None else 0.0
    return TraceEntry(report.max_abs_w, len(report.violation_w), lmin, lmax, rough)


def _initial_lambda(sample: Sample, line: SplineFit, tol_abs: float) -> tuple[float, SplineFit]:
    """Halve an equal weight from 1 until the fit hugs the least squares line."""
    lam = 1.0
    fit_ = solve_weighted(sample, np.full(sample.n, lam))
    for _ in range(_MAX_HALVINGS):
        if np.max(np.abs(fit_.values - line.values)) <= tol_abs:
            break
        lam *= 0.5
        fit_ = solve_weighted(sample, np.full(sample.n, lam))
    return lam, fit_


def _covered_mask(n: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Boolean mask of points lying in at least one of the intervals."""
    steps = np.zeros(n + 1)
    np.add.at(steps, lo - 1, 1.0)
    np.add.at(steps, hi, -1.0)
    return np.cumsum(steps[:-1]) > 0.0


def _run(sample: Sample, config: AdaptConfig, branch: str) -> FitReport:
    n = sample.n
    sigma = sigma_hat(sample) if config.sigma is None else float(config.sigma)
    spec = RegionSpec(sigma=sigma, tau=config.tau, n=n)
    family = dyadic_family(n)

    line = _ls_line(sample)
    report = in_region(sample, line.values, family, spec)
    trace = [_entry(report, None, 0.0)]
    if report.passed:
        return FitReport(
            final_fit=line,
            final_weights=None,
            iterations=0,
            trace=tuple(trace),
            sigma_used=sigma,
            threshold_used=spec.threshold,
            tau=config.tau,
            passed=True,
            truncated=False,
            chosen_branch=branch,
        )

    tol_abs = config.init_tolerance * sample.spread()
    lam1, current = _initial_lambda(sample, line, tol_abs)
    weights = np.full(n, lam1)

    iterations = 0
    truncated = False
    while True:
        report = in_region(sample, current.values, family, spec)
        trace.append(_entry(report, weights, current.roughness))
        if report.passed:
            break
        if iterations >= config.max_iterations:
            truncated = True
            break
        if branch == "global":
            weights = weights * config.q
        else:
            mask = _covered_mask(n, report.violation_lo, report.violation_hi)
            weights = np.where(mask, weights * config.q, weights)
        current = solve_weighted(sample, weights)
        iterations += 1

    return FitReport(
        final_fit=current,
        final_weights=weights,
        iterations=iterations,
        trace=tuple(trace),
        sigma_used=sigma,
        threshold_used=spec.threshold,
        tau=config.tau,
        passed=report.passed,
        truncated=truncated,
        chosen_branch=branch,
    )


def fit_local(sample: Sample, config: AdaptConfig | None = None) -> FitReport:
    """Adapt weights locally: bump only the points inside violating intervals."""
    return _run(sample, config or AdaptConfig(), "local")


def fit_global(sample: Sample, config: AdaptConfig | None = None) -> FitReport:
    """Adapt one shared weight: every failure bumps all points at once.

    This scans the classic one-parameter family of smoothing splines and
    accepts the smoothest member inside the region; its roughness trace is
    nondecreasing along the run.
    """
    return _run(sample, config or AdaptConfig(), "global")


def fit(sample: Sample, config: AdaptConfig | None = None) -> FitReport:
    """Run both branches and keep the smoother accepted fit.

    If exactly one branch is accepted it wins; otherwise the smaller final
    roughness wins, with ties going to the local branch.
    """
    config = config or AdaptConfig()
    local = fit_local(sample, config)
    glob = fit_global(sample, config)
    if local.passed != glob.passed:
        chosen = local if local.passed else glob
    elif glob.roughness < local.roughness:
        chosen = glob
    else:
        chosen = local
    return replace(
        chosen,
        roughness_local=local.roughness,
        roughness_global=glob.roughness,
        truncated_local=local.truncated,
        truncated_global=glob.truncated,
    )
