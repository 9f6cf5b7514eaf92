"""Power-law fits ``mean_qfi = c N^beta`` across system sizes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalingFit:
    beta: float
    c: float
    r_squared: float
    n_points: int
    covariance: np.ndarray  # of (beta, log c)

    @property
    def beta_err(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))


def fit_power_law(points) -> ScalingFit:
    """Weighted least squares of ``log(mean)`` on ``log(N)``.

    ``points`` holds ``(N, mean)`` or ``(N, mean, sem)`` tuples.  When every
    point carries a positive SEM the weights are ``(mean/sem)^2`` (delta-method
    variance of ``log(mean)``) and the covariance is the absolute one;
    otherwise all points are weighted equally and the covariance is scaled by
    the residual variance.
    """
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    pts.sort(key=lambda p: p[0])
    n = np.array([p[0] for p in pts], dtype=float)
    mean = np.array([p[1] for p in pts], dtype=float)
    sem = np.array([p[2] if len(p) > 2 and p[2] is not None else 0.0 for p in pts], dtype=float)
    if np.any(~np.isfinite(mean)) or np.any(mean <= 0):
        raise ValueError("power-law fit needs strictly positive means")
    if np.any(n <= 0):
        raise ValueError("system sizes must be positive")
    if np.unique(n).size < 2:
        raise ValueError("power-law fit needs at least two distinct system sizes")

    weighted = bool(np.all(sem > 0) and np.all(np.isfinite(sem)))
    w = (mean / sem) ** 2 if weighted else np.ones_like(mean)
    x, y = np.log(n), np.log(mean)
    design = np.column_stack([x, np.ones_like(x)])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    beta, log_c = coef

    resid = y - design @ coef
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    ss_res = np.sum(w * resid**2)
    r2 = 1.0 if ss_tot == 0 else float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))

    cov = np.linalg.inv(design.T @ (w[:, None] * design))
    if not weighted:
        dof = len(pts) - 2
        cov = cov * (ss_res / dof if dof > 0 else 0.0)
    return ScalingFit(float(beta), float(np.exp(log_c)), r2, len(pts), cov)


@dataclass(frozen=True)
class BetaPoint:
    k: float | None
    sigma_over_sqrtJ: float
    fit: ScalingFit | None
    sizes: tuple[int, ...]
    flag: str | None = None


def beta_curve(sweep, grid=None, min_sizes: int = 3, decimals: int = 9) -> list[BetaPoint]:
    """One power-law fit per ``(k, sigma/sqrt(J))`` group of a sweep.

    Rows are grouped on the rescaled resolution rounded to ``decimals``;
    rescaled grids built with :func:`spinmon.trajectory.rescaled_grid` align
    exactly.  Groups with fewer than ``min_sizes`` usable sizes are returned
    with ``fit=None`` and a flag.
    """
    groups = defaultdict(list)
    for row in sweep.rows:
        groups[(row.k, round(row.sigma_over_sqrtJ, decimals))].append(row)
    keys = sorted(groups, key=lambda kx: (kx[0] if kx[0] is not None else -np.inf, kx[1]))
    if grid is not None:
        wanted = {round(float(g), decimals) for g in grid}
        keys = [kx for kx in keys if kx[1] in wanted]
    out = []
    for k, x in keys:
        rows = [r for r in groups[(k, x)] if r.error is None and np.isfinite(r.mean)]
        sizes = tuple(sorted({r.N for r in rows}))
        if len(sizes) < min_sizes:
            out.append(BetaPoint(k, x, None, sizes, f"only {len(sizes)} usable sizes"))
            continue
        fit = fit_power_law([(r.N, r.mean, r.sem) for r in rows])
        out.append(BetaPoint(k, x, fit, sizes))
    return out
